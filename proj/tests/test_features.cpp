#include "scenerouter/error.hpp"
#include "scenerouter/features.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace scenerouter;

namespace {

TrajectorySegment path(std::initializer_list<Vec2> points) {
  TrajectorySegment seg;
  seg.observed = points;
  seg.future = {points.end()[-1]};
  return seg;
}

SceneWindow window_of(std::vector<TrajectorySegment> segs) {
  SceneWindow w;
  for (std::size_t i = 0; i < segs.size(); ++i) segs[i].agent_id = static_cast<std::int64_t>(i);
  w.segments = std::move(segs);
  return w;
}

}  // namespace

TEST_CASE("speed stats examples") {
  auto s = speed_stats(path({{0, 0}, {0, 0}, {0, 0}}), 1.0);
  CHECK(s.mean == 0.0);
  CHECK(s.variance == 0.0);
  CHECK(s.max == 0.0);

  s = speed_stats(path({{0, 0}, {1, 0}, {2, 0}, {3, 0}}), 1.0);
  CHECK(s.mean == doctest::Approx(1.0));
  CHECK(s.variance == doctest::Approx(0.0));
  CHECK(s.max == doctest::Approx(1.0));

  s = speed_stats(path({{0, 0}, {1, 0}, {3, 0}}), 1.0);
  CHECK(s.mean == doctest::Approx(1.5));
  CHECK(s.variance == doctest::Approx(0.25));
  CHECK(s.max == doctest::Approx(2.0));

  CHECK_THROWS_AS(speed_stats(path({{0, 0}}), 1.0), Error);
}

TEST_CASE("local density examples") {
  FeatureConfig cfg;
  cfg.r_neighbor = 1.0;
  auto single = window_of({path({{0, 0}, {1, 0}, {2, 0}})});
  const auto d1 = local_density(single, 0, cfg);
  CHECK(d1.local_density == 0.0);
  CHECK(d1.isolated);
  CHECK(d1.mean_distance == doctest::Approx(10.0));

  auto pair = window_of({path({{0, 0}, {1, 0}, {2, 0}}), path({{0, 0.5}, {1, 0.5}, {2, 0.5}})});
  for (std::size_t i = 0; i < 2; ++i) {
    const auto d = local_density(pair, i, cfg);
    CHECK(d.local_density == doctest::Approx(1.0));
    CHECK(d.mean_distance == doctest::Approx(0.5));
    CHECK_FALSE(d.isolated);
  }
}

TEST_CASE("local density of three scripted agents matches brute force") {
  FeatureConfig cfg;
  cfg.r_neighbor = 1.5;
  auto w = window_of({path({{0, 0}, {0.5, 0}, {1.0, 0}, {1.5, 0}}),
                      path({{1, 0}, {1, 1}, {1, 2}, {1, 3}}),
                      path({{3, 0}, {2.5, 0}, {2.0, 0}, {1.5, 0}})});
  for (std::size_t i = 0; i < 3; ++i) {
    const auto expected = oracle::features(w, i, cfg.r_neighbor, cfg.dt);
    const auto d = local_density(w, i, cfg);
    CHECK(d.local_density == doctest::Approx(expected[3]).epsilon(1e-12));
    CHECK(d.mean_distance == doctest::Approx(expected[4]).epsilon(1e-12));
  }
}

TEST_CASE("curvature examples") {
  FeatureConfig cfg;
  CHECK(curvature_profile(path({{0, 0}, {1, 0}, {2, 0}, {3, 0}}), cfg) == 0.0);

  for (double step : {0.1, 0.05, 0.02}) {
    TrajectorySegment seg;
    for (int t = 0; t < 12; ++t) seg.observed.push_back({std::cos(t * step), std::sin(t * step)});
    CHECK(std::abs(curvature_profile(seg, cfg) - 1.0) < 0.05);
  }

  const double k = curvature_profile(path({{0, 0}, {1, 0}, {1, 0}, {1, 1}}), cfg);
  CHECK(std::isfinite(k));
  // interior steps: t=1 has a zero-length step ahead, t=2 a zero-length step behind
  CHECK(k == 0.0);
  CHECK_THROWS_AS(curvature_profile(path({{0, 0}, {1, 0}}), cfg), Error);
}

TEST_CASE("relative velocity examples") {
  auto single = window_of({path({{0, 0}, {1, 0}, {2, 0}})});
  CHECK(relative_velocity_to_nearest(single, 0, 1.0) == 0.0);

  auto same = window_of({path({{0, 0}, {1, 1}, {2, 2}}), path({{5, 0}, {6, 1}, {7, 2}})});
  CHECK(relative_velocity_to_nearest(same, 0, 1.0) == 0.0);

  auto head_on = window_of({path({{0, 0}, {1, 0}, {2, 0}}), path({{6, 0}, {5, 0}, {4, 0}})});
  CHECK(relative_velocity_to_nearest(head_on, 0, 1.0) == doctest::Approx(2.0));
  CHECK(relative_velocity_to_nearest(head_on, 1, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("extract assembles components") {
  FeatureConfig cfg;
  auto still = window_of({path({{2, 2}, {2, 2}, {2, 2}})});
  const auto z = extract(still, 0, cfg);
  const std::array<double, 7> expected = {0, 0, 0, 0, 10.0 * cfg.r_neighbor, 0, 0};
  CHECK(z.values() == expected);
  CHECK(z.isolated);

  cfg.r_neighbor = 1.0;
  cfg.dt = 1.0;
  auto pair = window_of({path({{0, 0}, {1, 0}, {2, 0}}), path({{0, 0.5}, {1, 0.5}, {2, 0.5}})});
  const auto zp = extract(pair, 0, cfg);
  CHECK(zp.mean_speed == doctest::Approx(1.0));
  CHECK(zp.speed_variance == doctest::Approx(0.0));
  CHECK(zp.max_speed == doctest::Approx(1.0));
  CHECK(zp.local_density == doctest::Approx(1.0));
  CHECK(zp.mean_interagent_distance == doctest::Approx(0.5));
  CHECK(zp.mean_curvature == 0.0);
  CHECK(zp.rel_speed_to_nearest == 0.0);
}

TEST_CASE("agent order does not change an agent's vector") {
  Rng rng(5);
  FeatureConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    auto w = oracle::random_window(rng, 4, 8, 2);
    const auto before = extract(w, 0, cfg).values();
    std::swap(w.segments[0], w.segments[3]);
    std::swap(w.segments[1], w.segments[2]);
    const auto after = extract(w, 3, cfg).values();
    for (std::size_t c = 0; c < before.size(); ++c) {
      CHECK(std::abs(after[c] - before[c]) < 1e-12 * (1.0 + std::abs(before[c])));
    }
  }
}

TEST_CASE("per-frame units skip the dt division") {
  FeatureConfig cfg;
  cfg.per_frame_units = true;
  auto w = window_of({path({{0, 0}, {1, 0}, {3, 0}})});
  const auto z = extract(w, 0, cfg);
  CHECK(z.mean_speed == doctest::Approx(1.5));
  CHECK(z.max_speed == doctest::Approx(2.0));
}

TEST_CASE("features match the naive oracle on random windows") {
  Rng rng(99);
  FeatureConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = oracle::random_window(rng, 1 + rng.index(5), 3 + rng.index(8), 1);
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      const auto expected = oracle::features(w, i, cfg.r_neighbor, cfg.dt);
      const auto got = extract(w, i, cfg).values();
      for (std::size_t c = 0; c < 7; ++c) CHECK(std::abs(got[c] - expected[c]) < 1e-9);
      CHECK(got[2] >= got[0]);
      CHECK(got[1] >= 0.0);
    }
  }
}

TEST_CASE("rigid invariance and scale covariance") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = oracle::random_window(rng, 1 + rng.index(5), 3 + rng.index(8), 1);
    AugmentParams a;
    a.rotation = rng.uniform(-4.0, 4.0);
    a.translation = {rng.uniform(-100, 100), rng.uniform(-100, 100)};
    a.pivot = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
    FeatureConfig cfg;
    const auto rigid = augment(w, a);
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      const auto x = extract(w, i, cfg).values();
      const auto y = extract(rigid, i, cfg).values();
      for (std::size_t c = 0; c < 7; ++c) CHECK(std::abs(x[c] - y[c]) < 1e-9 * (1 + std::abs(x[c])));
    }

    const double s = rng.uniform(0.25, 4.0);
    AugmentParams scaled;
    scaled.scale = s;
    const auto big = augment(w, scaled);
    FeatureConfig scaled_cfg = cfg;
    scaled_cfg.r_neighbor = cfg.r_neighbor * s;
    scaled_cfg.curvature_epsilon = cfg.curvature_epsilon * s;
    for (std::size_t i = 0; i < w.segments.size(); ++i) {
      const auto x = extract(w, i, cfg);
      const auto y = extract(big, i, scaled_cfg);
      const auto near = [](double a, double b) { return std::abs(a - b) < 1e-9 * (1 + std::abs(b)); };
      CHECK(near(y.mean_speed, s * x.mean_speed));
      CHECK(near(y.max_speed, s * x.max_speed));
      CHECK(near(y.speed_variance, s * s * x.speed_variance));
      CHECK(near(y.mean_interagent_distance, s * x.mean_interagent_distance));
      CHECK(near(y.rel_speed_to_nearest, s * x.rel_speed_to_nearest));
      CHECK(near(y.mean_curvature, x.mean_curvature / s));
      CHECK(y.local_density == x.local_density);
    }
  }
}

TEST_CASE("config validation") {
  FeatureConfig cfg;
  cfg.r_neighbor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.r_neighbor = 1.0;
  cfg.curvature_epsilon = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
