#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace scenerouter {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product of (a, 0) and (b, 0).
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline Vec2 rotate(Vec2 p, double cos_a, double sin_a) {
  return {cos_a * p.x - sin_a * p.y, sin_a * p.x + cos_a * p.y};
}

using Path = std::vector<Vec2>;

struct RawRecord {
  std::int64_t frame_id = 0;
  std::int64_t agent_id = 0;
  Vec2 position;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

// One agent's observation window and the ground-truth continuation.
struct TrajectorySegment {
  std::int64_t agent_id = 0;
  Path observed;
  Path future;
  std::int64_t frame_start = 0;
  double dt = 0.4;

  friend bool operator==(const TrajectorySegment&, const TrajectorySegment&) = default;
};

// Co-temporal segments sharing frame_start, dt, and lengths.
struct SceneWindow {
  std::int64_t window_id = 0;
  std::vector<TrajectorySegment> segments;

  std::size_t t_obs() const { return segments.empty() ? 0 : segments.front().observed.size(); }
  std::size_t t_pred() const { return segments.empty() ? 0 : segments.front().future.size(); }
  double dt() const { return segments.empty() ? 0.0 : segments.front().dt; }

  friend bool operator==(const SceneWindow&, const SceneWindow&) = default;
};

// Throws InvalidArgument if the window breaks the alignment invariants.
void validate(const SceneWindow& window);

struct WindowParams {
  int t_obs = 8;
  int t_pred = 12;
  int stride = 1;
  // Spacing between consecutive frame ids (ETH-UCY exports use 10).
  // 0 means infer it from the records.
  std::int64_t frame_step = 1;
  double dt = 0.4;
};

// p -> scale * R(rotation) * (p - pivot) + pivot + translation
struct AugmentParams {
  double scale = 1.0;
  double rotation = 0.0;
  Vec2 translation;
  Vec2 pivot;

  bool is_identity() const {
    return scale == 1.0 && rotation == 0.0 && translation == Vec2{};
  }
  void validate() const;
  // Analytic inverse: augment(augment(w, a), a.inverse()) == w up to rounding.
  AugmentParams inverse() const;
  Vec2 apply(Vec2 p) const;
};

// Whitespace-separated "frame agent x y" lines; '#' starts a comment line.
// Records come back sorted by (frame_id, agent_id).
std::vector<RawRecord> parse_dataset(const std::filesystem::path& path);
std::vector<RawRecord> parse_records(std::istream& in);
void write_records(std::ostream& out, std::span<const RawRecord> records);

// Greatest common divisor of gaps between consecutive distinct frame ids.
std::int64_t infer_frame_step(std::span<const RawRecord> records);

// Slides a window of t_obs + t_pred frames over the records. An agent joins
// a window only if it is present at every frame of the span; windows with
// no qualifying agent are dropped. Window ids are assigned sequentially.
std::vector<SceneWindow> window_segments(std::span<const RawRecord> records,
                                         const WindowParams& params);

SceneWindow augment(const SceneWindow& window, const AugmentParams& params);

// Mean position of all observed points in the window.
Vec2 observed_centroid(const SceneWindow& window);

// One row per (window_id, agent_id, frame, x, y), observed frames first.
void write_windows_csv(std::ostream& out, std::span<const SceneWindow> windows);
std::vector<SceneWindow> read_windows_csv(std::istream& in, int t_obs, double dt);

// Flattens windows back into raw records (frame ids taken from frame_start).
std::vector<RawRecord> to_records(std::span<const SceneWindow> windows);

}  // namespace scenerouter
