#include "scenerouter/experts.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"

namespace scenerouter {

namespace {

void require_observed(const TrajectorySegment& seg, std::size_t minimum, std::string_view who) {
  if (seg.observed.size() < minimum) {
    throw Error(ErrorCode::kDegenerateSegment,
                std::string(who) + " needs " + std::to_string(minimum) + " observed points");
  }
}

Vec2 last_velocity(const TrajectorySegment& seg) {
  const auto& obs = seg.observed;
  return (obs[obs.size() - 1] - obs[obs.size() - 2]) / seg.dt;
}

}  // namespace

std::vector<Prediction> PerAgentExpert::predict(const SceneWindow& window) const {
  std::vector<Prediction> out;
  out.reserve(window.segments.size());
  for (std::size_t i = 0; i < window.segments.size(); ++i) {
    out.push_back(predict_segment(window, i));
  }
  return out;
}

Prediction ConstantVelocityExpert::predict_segment(const SceneWindow& window,
                                                   std::size_t index) const {
  const auto& seg = window.segments.at(index);
  require_observed(seg, 2, "constant_velocity");
  const Vec2 v = last_velocity(seg);
  Prediction out{seg.agent_id, {}};
  out.predicted.reserve(seg.future.size());
  Vec2 p = seg.observed.back();
  for (std::size_t k = 0; k < seg.future.size(); ++k) {
    p += seg.dt * v;
    out.predicted.push_back(p);
  }
  return out;
}

ExpertParams ConstantAccelerationExpert::parameters() const {
  return {{"max_accel", format_double(max_accel_)}};
}

Prediction ConstantAccelerationExpert::predict_segment(const SceneWindow& window,
                                                       std::size_t index) const {
  const auto& seg = window.segments.at(index);
  require_observed(seg, 3, "constant_acceleration");
  const auto& obs = seg.observed;
  const std::size_t n = obs.size();
  const double dt = seg.dt;
  Vec2 v = (obs[n - 1] - obs[n - 2]) / dt;
  const Vec2 v_prev = (obs[n - 2] - obs[n - 3]) / dt;
  Vec2 a = (v - v_prev) / dt;
  const double magnitude = a.norm();
  if (magnitude > max_accel_) a *= max_accel_ / magnitude;
  Prediction out{seg.agent_id, {}};
  out.predicted.reserve(seg.future.size());
  Vec2 p = obs.back();
  for (std::size_t k = 0; k < seg.future.size(); ++k) {
    v += dt * a;
    p += dt * v;
    out.predicted.push_back(p);
  }
  return out;
}

ExpertParams KalmanCvExpert::parameters() const {
  return {{"process_noise", format_double(process_noise_)},
          {"measurement_noise", format_double(measurement_noise_)}};
}

Prediction KalmanCvExpert::predict_segment(const SceneWindow& window, std::size_t index) const {
  using Mat4 = Eigen::Matrix4d;
  using Vec4 = Eigen::Vector4d;
  const auto& seg = window.segments.at(index);
  require_observed(seg, 2, "kalman_cv");
  const auto& obs = seg.observed;
  const double dt = seg.dt;
  const double r2 = measurement_noise_ * measurement_noise_;

  Mat4 f = Mat4::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  Mat4 q = Mat4::Zero();
  const double q11 = process_noise_ * dt * dt * dt / 3.0;
  const double q12 = process_noise_ * dt * dt / 2.0;
  const double q22 = process_noise_ * dt;
  q(0, 0) = q(1, 1) = q11;
  q(0, 2) = q(2, 0) = q(1, 3) = q(3, 1) = q12;
  q(2, 2) = q(3, 3) = q22;
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Eigen::Matrix2d r = r2 * Eigen::Matrix2d::Identity();

  // Two-point initialization at the second observation.
  const Vec2 v0 = (obs[1] - obs[0]) / dt;
  Vec4 x(obs[1].x, obs[1].y, v0.x, v0.y);
  Mat4 p = Mat4::Zero();
  p(0, 0) = p(1, 1) = r2;
  p(2, 2) = p(3, 3) = 2.0 * r2 / (dt * dt);
  p(0, 2) = p(2, 0) = p(1, 3) = p(3, 1) = r2 / dt;

  for (std::size_t t = 2; t < obs.size(); ++t) {
    x = f * x;
    p = f * p * f.transpose() + q;
    const Eigen::Vector2d z(obs[t].x, obs[t].y);
    const Eigen::Vector2d innovation = z - h * x;
    const Eigen::Matrix2d s = h * p * h.transpose() + r;
    const Eigen::Matrix<double, 4, 2> gain = p * h.transpose() * s.inverse();
    x += gain * innovation;
    p = (Mat4::Identity() - gain * h) * p;
  }

  Prediction out{seg.agent_id, {}};
  out.predicted.reserve(seg.future.size());
  for (std::size_t k = 0; k < seg.future.size(); ++k) {
    x = f * x;
    out.predicted.push_back({x(0), x(1)});
  }
  return out;
}

AgentFrame agent_frame(const Path& observed) {
  AgentFrame frame;
  frame.origin = observed.back();
  if (observed.size() >= 2) {
    const Vec2 heading = observed[observed.size() - 1] - observed[observed.size() - 2];
    const double len = heading.norm();
    if (len > 1e-9) {
      frame.cos_h = heading.x / len;
      frame.sin_h = heading.y / len;
    }
  }
  return frame;
}

std::vector<BankEntry> NnRetrievalExpert::build_bank(std::span<const SceneWindow> windows) {
  std::vector<BankEntry> bank;
  for (const auto& w : windows) {
    for (const auto& seg : w.segments) {
      const AgentFrame frame = agent_frame(seg.observed);
      BankEntry entry;
      for (const auto& p : seg.observed) entry.observed.push_back(frame.to_local(p));
      for (const auto& p : seg.future) entry.future.push_back(frame.to_local(p));
      bank.push_back(std::move(entry));
    }
  }
  return bank;
}

std::size_t NnRetrievalExpert::nearest(const Path& normalized_observed) const {
  if (bank_.empty()) throw Error(ErrorCode::kEmptyBank, name() + " has an empty bank");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < bank_.size(); ++e) {
    const auto& cand = bank_[e].observed;
    if (cand.size() != normalized_observed.size()) {
      throw Error(ErrorCode::kLengthMismatch, "bank observation length differs from query");
    }
    double d = 0.0;
    for (std::size_t t = 0; t < cand.size() && d < best_d; ++t) {
      const Vec2 diff = cand[t] - normalized_observed[t];
      d += dot(diff, diff);
    }
    if (d < best_d) {
      best_d = d;
      best = e;
    }
  }
  return best;
}

Prediction NnRetrievalExpert::predict_segment(const SceneWindow& window, std::size_t index) const {
  const auto& seg = window.segments.at(index);
  require_observed(seg, 2, "nn_retrieval");
  const AgentFrame frame = agent_frame(seg.observed);
  Path local;
  local.reserve(seg.observed.size());
  for (const auto& p : seg.observed) local.push_back(frame.to_local(p));
  const auto& match = bank_[nearest(local)];
  if (match.future.size() < seg.future.size()) {
    throw Error(ErrorCode::kLengthMismatch, "bank future shorter than the horizon");
  }
  Prediction out{seg.agent_id, {}};
  out.predicted.reserve(seg.future.size());
  for (std::size_t k = 0; k < seg.future.size(); ++k) {
    out.predicted.push_back(frame.to_world(match.future[k]));
  }
  return out;
}

void NnRetrievalExpert::save_bank(std::ostream& out, const std::vector<BankEntry>& bank) {
  const std::size_t t_obs = bank.empty() ? 0 : bank.front().observed.size();
  const std::size_t t_pred = bank.empty() ? 0 : bank.front().future.size();
  out << "t_obs=" << t_obs << ",t_pred=" << t_pred << '\n';
  for (const auto& e : bank) {
    bool first = true;
    const auto emit = [&](const Vec2& p) {
      out << (first ? "" : ",") << format_double(p.x) << ',' << format_double(p.y);
      first = false;
    };
    for (const auto& p : e.observed) emit(p);
    for (const auto& p : e.future) emit(p);
    out << '\n';
  }
}

std::vector<BankEntry> NnRetrievalExpert::load_bank(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "empty bank file");
  long long t_obs = 0;
  long long t_pred = 0;
  const auto header = split(trim(line), ',');
  if (header.size() != 2 || !header[0].starts_with("t_obs=") ||
      !header[1].starts_with("t_pred=") || !parse_int(header[0].substr(6), t_obs) ||
      !parse_int(header[1].substr(7), t_pred)) {
    throw Error(ErrorCode::kParseError, "bad bank header");
  }
  std::vector<BankEntry> bank;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split(body, ',');
    if (fields.size() != static_cast<std::size_t>(2 * (t_obs + t_pred))) {
      throw Error(ErrorCode::kParseError, "bank row has the wrong width");
    }
    BankEntry entry;
    for (long long i = 0; i < t_obs + t_pred; ++i) {
      Vec2 p;
      if (!parse_double(fields[static_cast<std::size_t>(2 * i)], p.x) ||
          !parse_double(fields[static_cast<std::size_t>(2 * i + 1)], p.y)) {
        throw Error(ErrorCode::kParseError, "bad number in bank");
      }
      (i < t_obs ? entry.observed : entry.future).push_back(p);
    }
    bank.push_back(std::move(entry));
  }
  return bank;
}

std::vector<Vec2> repulsion_accelerations(std::span<const Vec2> positions, double strength,
                                          double range) {
  std::vector<Vec2> acc(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i == j) continue;
      const Vec2 away = positions[i] - positions[j];
      const double d = away.norm();
      if (d < 1e-12) continue;
      acc[i] += (strength * std::exp(-d / range) / d) * away;
    }
  }
  return acc;
}

ExpertParams SocialRepulsionExpert::parameters() const {
  return {{"strength", format_double(strength_)}, {"range", format_double(range_)}};
}

std::vector<Prediction> SocialRepulsionExpert::predict(const SceneWindow& window) const {
  const std::size_t n = window.segments.size();
  std::vector<Vec2> pos(n);
  std::vector<Vec2> vel(n);
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& seg = window.segments[i];
    require_observed(seg, 2, "social_repulsion");
    pos[i] = seg.observed.back();
    vel[i] = last_velocity(seg);
    out[i].agent_id = seg.agent_id;
    out[i].predicted.reserve(seg.future.size());
  }
  const std::size_t horizon = window.t_pred();
  const double dt = window.dt();
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto acc = repulsion_accelerations(pos, strength_, range_);
    for (std::size_t i = 0; i < n; ++i) {
      vel[i] += dt * acc[i];
      pos[i] += dt * vel[i];
      out[i].predicted.push_back(pos[i]);
    }
  }
  return out;
}

Prediction SocialRepulsionExpert::predict_segment(const SceneWindow& window,
                                                  std::size_t index) const {
  return predict(window).at(index);
}

void ExpertPool::add(std::shared_ptr<const Expert> expert) {
  if (find(expert->name())) {
    throw Error(ErrorCode::kDuplicateExpertName, "expert '" + expert->name() + "' already exists");
  }
  experts_.push_back(std::move(expert));
}

std::optional<std::size_t> ExpertPool::find(std::string_view name) const {
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    if (experts_[i]->name() == name) return i;
  }
  return std::nullopt;
}

ExpertId ExpertPool::id(std::size_t index) const {
  const auto& e = at(index);
  return {index + 1, e.name(), e.cost_hint()};
}

std::vector<std::string> ExpertPool::names() const {
  std::vector<std::string> out;
  for (const auto& e : experts_) out.push_back(e->name());
  return out;
}

ExpertPool ExpertPool::subset(std::span<const std::string> names) const {
  ExpertPool out;
  for (const auto& name : names) {
    if (!find(name)) throw Error(ErrorCode::kInvalidArgument, "unknown expert '" + name + "'");
  }
  for (const auto& e : experts_) {
    if (std::find(names.begin(), names.end(), e->name()) != names.end()) out.add(e);
  }
  return out;
}

namespace {

double param_or(const ExpertParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v = 0.0;
  if (!parse_double(it->second, v)) {
    throw Error(ErrorCode::kParseError, "bad value for " + key + ": '" + it->second + "'");
  }
  return v;
}

}  // namespace

std::shared_ptr<const Expert> make_expert(std::string_view spec,
                                          const std::filesystem::path& base_dir) {
  const auto tokens = split_whitespace(spec);
  if (tokens.empty()) throw Error(ErrorCode::kParseError, "empty expert spec");
  const std::string& type = tokens[0];
  ExpertParams params;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, "expected key=value, got '" + tokens[i] + "'");
    }
    params[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  const std::string name = params.count("name") ? params.at("name") : type;
  const double cost = param_or(params, "cost_hint", -1.0);
  if (type == "constant_velocity") {
    return std::make_shared<ConstantVelocityExpert>(name, cost < 0 ? 1.0 : cost);
  }
  if (type == "constant_acceleration") {
    return std::make_shared<ConstantAccelerationExpert>(param_or(params, "max_accel", 4.0), name,
                                                        cost < 0 ? 1.0 : cost);
  }
  if (type == "kalman_cv") {
    return std::make_shared<KalmanCvExpert>(param_or(params, "process_noise", 1e-3),
                                            param_or(params, "measurement_noise", 0.03), name,
                                            cost < 0 ? 2.0 : cost);
  }
  if (type == "social_repulsion") {
    return std::make_shared<SocialRepulsionExpert>(param_or(params, "strength", 0.3),
                                                   param_or(params, "range", 0.5), name,
                                                   cost < 0 ? 3.0 : cost);
  }
  if (type == "nn_retrieval") {
    std::vector<BankEntry> bank;
    if (params.count("bank")) {
      const auto path = base_dir / params.at("bank");
      std::ifstream in(path);
      if (!in) throw Error(ErrorCode::kArtifactNotFound, "missing bank file " + path.string());
      bank = NnRetrievalExpert::load_bank(in);
    }
    return std::make_shared<NnRetrievalExpert>(std::move(bank), name, cost < 0 ? 4.0 : cost);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown expert type '" + type + "'");
}

ExpertPool default_pool(std::span<const SceneWindow> bank_windows) {
  ExpertPool pool;
  pool.add(std::make_shared<ConstantVelocityExpert>());
  pool.add(std::make_shared<ConstantAccelerationExpert>());
  pool.add(std::make_shared<KalmanCvExpert>());
  pool.add(std::make_shared<NnRetrievalExpert>(NnRetrievalExpert::build_bank(bank_windows)));
  pool.add(std::make_shared<SocialRepulsionExpert>());
  return pool;
}

std::string manifest_line(const Expert& expert) {
  std::ostringstream line;
  line << expert.type() << " name=" << expert.name()
       << " cost_hint=" << format_double(expert.cost_hint()) << " seed=0";
  for (const auto& [key, value] : expert.parameters()) line << ' ' << key << '=' << value;
  if (expert.type() == "nn_retrieval") line << " bank=" << expert.name() << "_bank.csv";
  return line.str();
}

void save_pool(const std::filesystem::path& dir, const ExpertPool& pool) {
  std::ostringstream manifest;
  manifest << "# scenerouter expert pool 1\n";
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& expert = pool.at(i);
    manifest << manifest_line(expert) << '\n';
    if (const auto* nn = dynamic_cast<const NnRetrievalExpert*>(&expert)) {
      std::ostringstream bank;
      NnRetrievalExpert::save_bank(bank, nn->bank());
      write_file(dir / (expert.name() + "_bank.csv"), bank.str());
    }
  }
  write_file(dir / "pool.txt", manifest.str());
}

ExpertPool load_pool(const std::filesystem::path& dir) {
  const auto path = dir / "pool.txt";
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kArtifactNotFound, "missing pool manifest " + path.string());
  }
  std::istringstream in(read_file(path));
  ExpertPool pool;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    pool.add(make_expert(body, dir));
  }
  return pool;
}

}  // namespace scenerouter
