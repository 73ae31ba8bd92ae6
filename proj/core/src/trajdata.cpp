#include "scenerouter/trajdata.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>

#include "scenerouter/error.hpp"
#include "scenerouter/numeric.hpp"

namespace scenerouter {

void validate(const SceneWindow& window) {
  if (window.segments.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "window has no segments");
  }
  const auto& first = window.segments.front();
  for (const auto& seg : window.segments) {
    if (seg.observed.size() != first.observed.size() ||
        seg.future.size() != first.future.size() ||
        seg.frame_start != first.frame_start || seg.dt != first.dt) {
      throw Error(ErrorCode::kInvalidArgument,
                  "window " + std::to_string(window.window_id) + " is not time-aligned");
    }
    for (const auto& p : seg.observed) {
      if (!p.finite()) throw Error(ErrorCode::kInvalidArgument, "non-finite position");
    }
    for (const auto& p : seg.future) {
      if (!p.finite()) throw Error(ErrorCode::kInvalidArgument, "non-finite position");
    }
  }
}

void AugmentParams::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument, "augment scale must be positive");
  }
  if (!std::isfinite(rotation) || !translation.finite() || !pivot.finite()) {
    throw Error(ErrorCode::kInvalidArgument, "augment parameters must be finite");
  }
}

AugmentParams AugmentParams::inverse() const {
  // q = s R (p - c) + c + t  =>  p = (1/s) R(-a) (q - (c + t)) + (c + t) - t
  AugmentParams inv;
  inv.scale = 1.0 / scale;
  inv.rotation = -rotation;
  inv.pivot = pivot + translation;
  inv.translation = -translation;
  return inv;
}

Vec2 AugmentParams::apply(Vec2 p) const {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  return scale * rotate(p - pivot, c, s) + pivot + translation;
}

std::vector<RawRecord> parse_records(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_whitespace(body);
    if (fields.size() < 4) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected 4 fields (frame agent x y)",
                  line_no);
    }
    double values[4];
    for (int i = 0; i < 4; ++i) {
      if (!parse_double(fields[i], values[i]) || !std::isfinite(values[i])) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": non-numeric field '" + fields[i] + "'",
                    line_no);
      }
    }
    if (values[0] != std::floor(values[0]) || values[1] != std::floor(values[1])) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": frame and agent ids must be integers",
                  line_no);
    }
    if (values[0] < 0) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": negative frame id", line_no);
    }
    records.push_back({static_cast<std::int64_t>(values[0]),
                       static_cast<std::int64_t>(values[1]), {values[2], values[3]}});
  }
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no trajectory records");
  }
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return std::tie(a.frame_id, a.agent_id) < std::tie(b.frame_id, b.agent_id);
  });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].frame_id == records[i - 1].frame_id &&
        records[i].agent_id == records[i - 1].agent_id) {
      throw Error(ErrorCode::kParseError,
                  "duplicate record for agent " + std::to_string(records[i].agent_id) +
                      " at frame " + std::to_string(records[i].frame_id));
    }
  }
  return records;
}

std::vector<RawRecord> parse_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return parse_records(in);
}

void write_records(std::ostream& out, std::span<const RawRecord> records) {
  out << "# frame agent x y\n";
  for (const auto& r : records) {
    out << r.frame_id << ' ' << r.agent_id << ' ' << format_double(r.position.x) << ' '
        << format_double(r.position.y) << '\n';
  }
}

std::int64_t infer_frame_step(std::span<const RawRecord> records) {
  std::int64_t step = 0;
  std::int64_t previous = -1;
  for (const auto& r : records) {
    if (previous >= 0 && r.frame_id != previous) {
      step = std::gcd(step, r.frame_id - previous);
    }
    previous = r.frame_id;
  }
  return step == 0 ? 1 : step;
}

std::vector<SceneWindow> window_segments(std::span<const RawRecord> records,
                                         const WindowParams& params) {
  if (params.t_obs < 3 || params.t_pred < 1 || params.stride < 1 || params.frame_step < 0 ||
      !(params.dt > 0.0)) {
    throw Error(ErrorCode::kInvalidWindowParams,
                "need t_obs >= 3, t_pred >= 1, stride >= 1, dt > 0");
  }
  std::vector<SceneWindow> windows;
  if (records.empty()) return windows;

  const std::int64_t step =
      params.frame_step == 0 ? infer_frame_step(records) : params.frame_step;
  // agent -> frame -> position; ordered maps keep agent iteration sorted.
  std::map<std::int64_t, std::unordered_map<std::int64_t, Vec2>> tracks;
  std::int64_t min_frame = records.front().frame_id;
  std::int64_t max_frame = records.front().frame_id;
  for (const auto& r : records) {
    tracks[r.agent_id][r.frame_id] = r.position;
    min_frame = std::min(min_frame, r.frame_id);
    max_frame = std::max(max_frame, r.frame_id);
  }

  const std::int64_t span_frames = params.t_obs + params.t_pred;
  const std::int64_t last_start = max_frame - (span_frames - 1) * step;
  std::int64_t next_id = 0;
  for (std::int64_t start = min_frame; start <= last_start; start += params.stride * step) {
    SceneWindow window;
    for (const auto& [agent, frames] : tracks) {
      TrajectorySegment seg;
      seg.agent_id = agent;
      seg.frame_start = start;
      seg.dt = params.dt;
      bool complete = true;
      for (std::int64_t k = 0; k < span_frames; ++k) {
        const auto it = frames.find(start + k * step);
        if (it == frames.end()) {
          complete = false;
          break;
        }
        (k < params.t_obs ? seg.observed : seg.future).push_back(it->second);
      }
      if (complete) window.segments.push_back(std::move(seg));
    }
    if (!window.segments.empty()) {
      window.window_id = next_id++;
      windows.push_back(std::move(window));
    }
  }
  return windows;
}

SceneWindow augment(const SceneWindow& window, const AugmentParams& params) {
  params.validate();
  if (params.is_identity()) return window;
  SceneWindow out = window;
  const double c = std::cos(params.rotation);
  const double s = std::sin(params.rotation);
  const auto map = [&](Vec2 p) {
    return params.scale * rotate(p - params.pivot, c, s) + params.pivot + params.translation;
  };
  for (auto& seg : out.segments) {
    for (auto& p : seg.observed) p = map(p);
    for (auto& p : seg.future) p = map(p);
  }
  return out;
}

Vec2 observed_centroid(const SceneWindow& window) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& seg : window.segments) {
    for (const auto& p : seg.observed) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
  }
  return {mean(xs), mean(ys)};
}

void write_windows_csv(std::ostream& out, std::span<const SceneWindow> windows) {
  out << "window_id,agent_id,frame,x,y\n";
  for (const auto& w : windows) {
    for (const auto& seg : w.segments) {
      std::int64_t frame = seg.frame_start;
      const auto emit = [&](const Vec2& p) {
        out << w.window_id << ',' << seg.agent_id << ',' << frame++ << ','
            << format_double(p.x) << ',' << format_double(p.y) << '\n';
      };
      for (const auto& p : seg.observed) emit(p);
      for (const auto& p : seg.future) emit(p);
    }
  }
}

std::vector<SceneWindow> read_windows_csv(std::istream& in, int t_obs, double dt) {
  std::vector<SceneWindow> windows;
  std::string line;
  std::size_t line_no = 0;
  // Rows are grouped by window then agent, in frame order.
  struct Row {
    long long window, agent, frame;
    Vec2 p;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (line_no == 1 && body.starts_with("window_id")) continue;
    const auto fields = split(body, ',');
    Row row{};
    if (fields.size() != 5 || !parse_int(fields[0], row.window) ||
        !parse_int(fields[1], row.agent) || !parse_int(fields[2], row.frame) ||
        !parse_double(fields[3], row.p.x) || !parse_double(fields[4], row.p.y)) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad window row",
                  line_no);
    }
    rows.push_back(row);
  }
  for (std::size_t i = 0; i < rows.size();) {
    SceneWindow window;
    window.window_id = rows[i].window;
    while (i < rows.size() && rows[i].window == window.window_id) {
      TrajectorySegment seg;
      seg.agent_id = rows[i].agent;
      seg.frame_start = rows[i].frame;
      seg.dt = dt;
      std::size_t count = 0;
      while (i < rows.size() && rows[i].window == window.window_id &&
             rows[i].agent == seg.agent_id) {
        (count < static_cast<std::size_t>(t_obs) ? seg.observed : seg.future).push_back(rows[i].p);
        ++count;
        ++i;
      }
      window.segments.push_back(std::move(seg));
    }
    validate(window);
    windows.push_back(std::move(window));
  }
  return windows;
}

std::vector<RawRecord> to_records(std::span<const SceneWindow> windows) {
  std::vector<RawRecord> records;
  for (const auto& w : windows) {
    for (const auto& seg : w.segments) {
      std::int64_t frame = seg.frame_start;
      for (const auto& p : seg.observed) records.push_back({frame++, seg.agent_id, p});
      for (const auto& p : seg.future) records.push_back({frame++, seg.agent_id, p});
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return std::tie(a.frame_id, a.agent_id) < std::tie(b.frame_id, b.agent_id);
  });
  return records;
}

}  // namespace scenerouter
