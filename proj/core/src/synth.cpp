#include "scenerouter/synth.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "scenerouter/experts.hpp"
#include "scenerouter/random.hpp"

namespace scenerouter {

namespace {

constexpr std::int64_t kAgentsPerWindow = 16;

// Places n points so each new one lies min_gap..max_gap from some earlier
// point and at least min_gap from all of them.
std::vector<Vec2> scatter(Rng& rng, std::size_t n, double min_gap, double max_gap) {
  std::vector<Vec2> pts{{0.0, 0.0}};
  while (pts.size() < n) {
    const Vec2 anchor = pts[rng.index(pts.size())];
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = rng.uniform(min_gap, max_gap);
    const Vec2 cand = anchor + Vec2{r * std::cos(angle), r * std::sin(angle)};
    bool ok = true;
    for (const auto& p : pts) ok = ok && distance(p, cand) >= min_gap;
    if (ok) pts.push_back(cand);
  }
  return pts;
}

Vec2 heading(Rng& rng) {
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {std::cos(angle), std::sin(angle)};
}

// Unit vector within +-spread radians of `base`.
Vec2 heading_near(Rng& rng, Vec2 base, double spread) {
  const double angle = std::atan2(base.y, base.x) + rng.uniform(-spread, spread);
  return {std::cos(angle), std::sin(angle)};
}

using Tracks = std::vector<Path>;

Tracks dense_crowd(Rng& rng, const SynthParams& p, std::size_t frames) {
  const std::size_t n = 7 + rng.index(2);
  const double spacing = 1.2;
  const Vec2 drift = rng.uniform(0.3, 0.5) * heading(rng);
  std::vector<Vec2> pos(n);
  std::vector<Vec2> vel(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = {static_cast<double>(i % 3) * spacing + rng.uniform(-0.05, 0.05),
              static_cast<double>(i / 3) * spacing + rng.uniform(-0.05, 0.05)};
    vel[i] = drift + Vec2{rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03)};
  }
  Tracks tracks(n);
  for (std::size_t i = 0; i < n; ++i) tracks[i].push_back(pos[i]);
  for (std::size_t f = 1; f < frames; ++f) {
    const auto acc = repulsion_accelerations(pos, p.repulsion_strength, p.repulsion_range);
    for (std::size_t i = 0; i < n; ++i) {
      vel[i] += p.dt * acc[i];
      pos[i] += p.dt * vel[i];
      tracks[i].push_back(pos[i]);
    }
  }
  return tracks;
}

Tracks medium_flow(Rng& rng, const SynthParams& p, std::size_t frames) {
  const std::size_t n = 3 + rng.index(3);
  const auto starts = scatter(rng, n, 3.0, 6.0);
  const Vec2 flow = heading(rng);
  const double speed = rng.uniform(0.7, 1.0);
  const Vec2 normal{-flow.y, flow.x};
  const Vec2 a = rng.uniform(0.09, 0.12) * flow + rng.uniform(-0.02, 0.02) * normal;
  Tracks tracks(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 dir = heading_near(rng, flow, 0.1);
    const Vec2 v0 = (speed + rng.uniform(-0.03, 0.03)) * dir;
    for (std::size_t f = 0; f < frames; ++f) {
      const double t = static_cast<double>(f) * p.dt;
      tracks[i].push_back(starts[i] + t * v0 + (0.5 * t * t) * a);
    }
  }
  return tracks;
}

Tracks straight_lines(Rng& rng, const SynthParams& p, std::size_t frames, std::size_t n,
                      double min_gap, double max_gap, double min_speed, double max_speed,
                      double spread) {
  const auto starts = scatter(rng, n, min_gap, max_gap);
  const Vec2 base = heading(rng);
  const double speed = rng.uniform(min_speed, max_speed);
  Tracks tracks(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double jitter = rng.uniform(-0.02, 0.02) * speed;
    const Vec2 v = (speed + jitter) * heading_near(rng, base, spread);
    for (std::size_t f = 0; f < frames; ++f) {
      tracks[i].push_back(starts[i] + (static_cast<double>(f) * p.dt) * v);
    }
  }
  return tracks;
}

Tracks complex_motion(Rng& rng, const SynthParams& p, std::size_t frames) {
  // A group turning in formation: identical circles about displaced centers.
  const std::size_t n = 2 + rng.index(2);
  const auto centers = scatter(rng, n, 3.0, 5.0);
  const double speed = rng.index(2) == 0 ? 2.4 : 2.8;
  const double radius = rng.index(2) == 0 ? 1.5 : 2.0;
  const double turn = rng.index(2) == 0 ? 1.0 : -1.0;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double omega = turn * speed / radius;
  Tracks tracks(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < frames; ++f) {
      const double a = phase + omega * static_cast<double>(f) * p.dt;
      tracks[i].push_back(centers[i] + radius * Vec2{std::cos(a), std::sin(a)});
    }
  }
  return tracks;
}

}  // namespace

Regime regime_of(std::size_t window_index) {
  return static_cast<Regime>(window_index % kRegimeCount);
}

SceneWindow synth_window(const SynthParams& params, std::size_t window_index) {
  Rng rng(derive_seed(derive_seed(params.seed, "synth"), window_index));
  const std::size_t frames = static_cast<std::size_t>(params.t_obs + params.t_pred);
  Tracks tracks;
  switch (regime_of(window_index)) {
    case Regime::kDenseCrowd:
      tracks = dense_crowd(rng, params, frames);
      break;
    case Regime::kMediumFlow:
      tracks = medium_flow(rng, params, frames);
      break;
    case Regime::kSparseStatic:
      tracks = straight_lines(rng, params, frames, 2 + rng.index(3), 4.0, 8.0, 0.02, 0.08, 0.5);
      break;
    case Regime::kLowDensity:
      tracks = straight_lines(rng, params, frames, 2 + rng.index(2), 12.0, 16.0, 1.4, 1.8, 0.05);
      for (auto& track : tracks) {
        for (auto& point : track) {
          point += Vec2{rng.normal(0.0, params.noise_sigma), rng.normal(0.0, params.noise_sigma)};
        }
      }
      break;
    case Regime::kComplexMotion:
      tracks = complex_motion(rng, params, frames);
      break;
  }
  const Vec2 offset{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
  SceneWindow window;
  window.window_id = static_cast<std::int64_t>(window_index);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    TrajectorySegment seg;
    seg.agent_id = static_cast<std::int64_t>(window_index) * kAgentsPerWindow +
                   static_cast<std::int64_t>(i);
    seg.frame_start = static_cast<std::int64_t>(window_index * (frames + 1));
    seg.dt = params.dt;
    for (std::size_t f = 0; f < frames; ++f) {
      const Vec2 point = tracks[i][f] + offset;
      (f < static_cast<std::size_t>(params.t_obs) ? seg.observed : seg.future).push_back(point);
    }
    window.segments.push_back(std::move(seg));
  }
  return window;
}

SynthDataset synth_benchmark(const SynthParams& params) {
  SynthDataset data;
  const std::size_t total = params.windows_per_regime * kRegimeCount;
  data.windows.reserve(total);
  for (std::size_t w = 0; w < total; ++w) {
    data.windows.push_back(synth_window(params, w));
    data.regimes.push_back(regime_of(w));
  }
  return data;
}

void write_regimes_csv(std::ostream& out, const SynthDataset& data) {
  out << "window_id,regime\n";
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    out << data.windows[w].window_id << ','
        << kRegimeNames[static_cast<std::size_t>(data.regimes[w])] << '\n';
  }
}

}  // namespace scenerouter
