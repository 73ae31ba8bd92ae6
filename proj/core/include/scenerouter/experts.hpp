#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scenerouter/trajdata.hpp"

namespace scenerouter {

struct Prediction {
  std::int64_t agent_id = 0;
  Path predicted;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct ExpertId {
  std::size_t index = 0;  // 1-based position in the pool
  std::string name;
  double cost_hint = 1.0;
};

using ExpertParams = std::map<std::string, std::string>;

// A frozen trajectory predictor. Implementations must be deterministic and
// return exactly one prediction per segment, in segment order, each of
// length t_pred.
class Expert {
 public:
  Expert(std::string name, double cost_hint) : name_(std::move(name)), cost_hint_(cost_hint) {}
  virtual ~Expert() = default;

  const std::string& name() const { return name_; }
  double cost_hint() const { return cost_hint_; }

  virtual std::string_view type() const = 0;
  virtual std::vector<Prediction> predict(const SceneWindow& window) const = 0;
  // Prediction for a single segment; joint experts still see the whole window.
  virtual Prediction predict_segment(const SceneWindow& window, std::size_t index) const = 0;
  // key=value parameters recorded in the pool manifest (name/cost excluded).
  virtual ExpertParams parameters() const = 0;

 private:
  std::string name_;
  double cost_hint_;
};

// Experts that predict each agent independently of the others.
class PerAgentExpert : public Expert {
 public:
  using Expert::Expert;
  std::vector<Prediction> predict(const SceneWindow& window) const final;
};

// Linear extrapolation from the last-step velocity.
class ConstantVelocityExpert final : public PerAgentExpert {
 public:
  explicit ConstantVelocityExpert(std::string name = "constant_velocity", double cost_hint = 1.0)
      : PerAgentExpert(std::move(name), cost_hint) {}

  std::string_view type() const override { return "constant_velocity"; }
  Prediction predict_segment(const SceneWindow& window, std::size_t index) const override;
  ExpertParams parameters() const override { return {}; }
};

// Second-order extrapolation from the last two velocity estimates; the
// acceleration magnitude is clamped to max_accel (m/s^2).
class ConstantAccelerationExpert final : public PerAgentExpert {
 public:
  explicit ConstantAccelerationExpert(double max_accel = 4.0,
                                      std::string name = "constant_acceleration",
                                      double cost_hint = 1.0)
      : PerAgentExpert(std::move(name), cost_hint), max_accel_(max_accel) {}

  std::string_view type() const override { return "constant_acceleration"; }
  Prediction predict_segment(const SceneWindow& window, std::size_t index) const override;
  ExpertParams parameters() const override;

 private:
  double max_accel_;
};

// Constant-velocity Kalman filter run over the observation window, then
// rolled out open loop.
class KalmanCvExpert final : public PerAgentExpert {
 public:
  // process_noise: white-acceleration spectral density (m^2/s^3);
  // measurement_noise: position standard deviation (m).
  explicit KalmanCvExpert(double process_noise = 1e-3, double measurement_noise = 0.03,
                          std::string name = "kalman_cv", double cost_hint = 2.0)
      : PerAgentExpert(std::move(name), cost_hint),
        process_noise_(process_noise),
        measurement_noise_(measurement_noise) {}

  std::string_view type() const override { return "kalman_cv"; }
  Prediction predict_segment(const SceneWindow& window, std::size_t index) const override;
  ExpertParams parameters() const override;

 private:
  double process_noise_;
  double measurement_noise_;
};

// Observed/future pair in the agent frame: last observed point at the
// origin, last step pointing along +x.
struct BankEntry {
  Path observed;
  Path future;
};

struct AgentFrame {
  Vec2 origin;
  double cos_h = 1.0;
  double sin_h = 0.0;

  Vec2 to_local(Vec2 p) const { return rotate(p - origin, cos_h, -sin_h); }
  Vec2 to_world(Vec2 p) const { return rotate(p, cos_h, sin_h) + origin; }
};

AgentFrame agent_frame(const Path& observed);

// Memory-based expert: replays the future of the nearest bank entry under
// L2 distance between normalized observations (ties to the earliest entry).
class NnRetrievalExpert final : public PerAgentExpert {
 public:
  explicit NnRetrievalExpert(std::vector<BankEntry> bank = {},
                             std::string name = "nn_retrieval", double cost_hint = 4.0)
      : PerAgentExpert(std::move(name), cost_hint), bank_(std::move(bank)) {}

  static std::vector<BankEntry> build_bank(std::span<const SceneWindow> windows);

  std::string_view type() const override { return "nn_retrieval"; }
  Prediction predict_segment(const SceneWindow& window, std::size_t index) const override;
  ExpertParams parameters() const override { return {}; }

  const std::vector<BankEntry>& bank() const { return bank_; }
  // Index of the nearest entry for an already-normalized observation.
  std::size_t nearest(const Path& normalized_observed) const;

  static void save_bank(std::ostream& out, const std::vector<BankEntry>& bank);
  static std::vector<BankEntry> load_bank(std::istream& in);

 private:
  std::vector<BankEntry> bank_;
};

// Pairwise repulsive acceleration strength * exp(-d / range) along the
// separation direction, for every agent against all others.
std::vector<Vec2> repulsion_accelerations(std::span<const Vec2> positions, double strength,
                                          double range);

// Constant velocity plus pairwise repulsion, integrated jointly with
// semi-implicit Euler (v += dt a; x += dt v). strength 0 reduces to
// constant velocity exactly.
class SocialRepulsionExpert final : public Expert {
 public:
  explicit SocialRepulsionExpert(double strength = 0.3, double range = 0.5,
                                 std::string name = "social_repulsion", double cost_hint = 3.0)
      : Expert(std::move(name), cost_hint), strength_(strength), range_(range) {}

  std::string_view type() const override { return "social_repulsion"; }
  std::vector<Prediction> predict(const SceneWindow& window) const override;
  Prediction predict_segment(const SceneWindow& window, std::size_t index) const override;
  ExpertParams parameters() const override;

  double strength() const { return strength_; }
  double range() const { return range_; }

 private:
  double strength_;
  double range_;
};

class ExpertPool {
 public:
  ExpertPool() = default;

  // Throws DuplicateExpertName when the name is taken.
  void add(std::shared_ptr<const Expert> expert);

  std::size_t size() const { return experts_.size(); }
  bool empty() const { return experts_.empty(); }
  // 0-based access.
  const Expert& at(std::size_t index) const { return *experts_.at(index); }
  std::shared_ptr<const Expert> shared(std::size_t index) const { return experts_.at(index); }
  std::optional<std::size_t> find(std::string_view name) const;
  ExpertId id(std::size_t index) const;
  std::vector<std::string> names() const;

  // Sub-pool keeping the named experts, in pool order.
  ExpertPool subset(std::span<const std::string> names) const;

 private:
  std::vector<std::shared_ptr<const Expert>> experts_;
};

// Parses one manifest line: "<type> name=<name> [cost_hint=..] [seed=..] [key=value ...]".
// nn_retrieval banks are read from bank=<file> relative to base_dir.
std::shared_ptr<const Expert> make_expert(std::string_view spec,
                                          const std::filesystem::path& base_dir = {});

// The five built-in experts with default parameters; the retrieval bank is
// built from `bank_windows`.
ExpertPool default_pool(std::span<const SceneWindow> bank_windows);

// Writes pool.txt plus one bank CSV per retrieval expert into `dir`.
void save_pool(const std::filesystem::path& dir, const ExpertPool& pool);
ExpertPool load_pool(const std::filesystem::path& dir);
std::string manifest_line(const Expert& expert);

}  // namespace scenerouter
