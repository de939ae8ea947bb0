#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ubvm/acoustics.hpp"
#include "ubvm/error.hpp"
#include "ubvm/estimator.hpp"

using namespace ubvm;

namespace {

EdgeTimestamps ticks_from_us(std::vector<double> us, double rate = 64.0) {
  EdgeTimestamps e;
  e.tick_rate = rate;
  for (double t : us) e.rising_edges.push_back(static_cast<std::int64_t>(std::llround(t * rate)));
  return e;
}

std::vector<WallPoint> to_points(const std::vector<oracle::P3>& p) {
  std::vector<WallPoint> out;
  for (const auto& q : p) out.push_back({q[0], q[1], q[2]});
  return out;
}

std::vector<oracle::P3> cap_points(const oracle::Sphere& s) {
  // Eight points seen by a 2x2 patch of normal beams at +/-7.5 mm.
  std::vector<oracle::P3> out;
  for (double x : {-7.5, 7.5}) {
    for (double y : {-7.5, 7.5}) {
      const auto hit = oracle::ray_sphere({x, y, 0}, {0, 0, 1}, s.center, s.radius);
      out.push_back({x, y, hit->first});
      out.push_back({x, y, hit->second});
    }
  }
  return out;
}

// Frames for a sweep where each (id, depth) pair becomes a 3-edge burst.
SweepBuffer synthetic_sweep(const std::vector<std::pair<int, std::vector<double>>>& walls,
                            std::uint8_t flags = 0) {
  SweepBuffer b;
  for (const auto& [id, depths] : walls) {
    for (double d : depths) {
      const double t = round_trip_time(d, kSpeedOfSound);
      for (double dt : {-0.5, 0.0, 0.5}) {
        b.frames.emplace_back(1, static_cast<std::uint8_t>(id), flags,
                              static_cast<std::uint32_t>(std::llround((t + dt) * 64.0)));
      }
    }
  }
  b.complete = true;
  return b;
}

std::vector<std::pair<int, std::vector<double>>> sphere_walls(const oracle::Sphere& s,
                                                              const std::vector<int>& ids = {1, 2, 3, 4}) {
  const auto array = TransducerArray::default_patch();
  std::vector<std::pair<int, std::vector<double>>> out;
  for (int id : ids) {
    const auto& e = array.element(id);
    const auto hit = oracle::ray_sphere({e.position.x(), e.position.y(), 0}, {0, 0, 1}, s.center, s.radius);
    out.push_back({id, {hit->first, hit->second}});
  }
  return out;
}

}  // namespace

TEST(ClusterBursts, GroupsAndAverages) {
  const auto r = cluster_bursts(ticks_from_us({54.05, 54.55, 55.05, 135.1, 135.6}), 2, 5.0);
  ASSERT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.clusters[0].wall, Wall::anterior);
  EXPECT_EQ(r.clusters[1].wall, Wall::posterior);
  EXPECT_EQ(r.clusters[0].transducer_id, 2);
  EXPECT_NEAR(r.clusters[0].mean_tick / 64.0, 54.55, 1.0 / 64.0);
  EXPECT_NEAR(r.clusters[1].mean_tick / 64.0, 135.35, 1.0 / 64.0);
  EXPECT_EQ(r.discarded, 0u);
}

TEST(ClusterBursts, EmptyAndSingle) {
  EXPECT_TRUE(cluster_bursts(EdgeTimestamps{}, 1).clusters.empty());
  const auto r = cluster_bursts(ticks_from_us({40.0, 40.5}), 1);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].wall, Wall::anterior);
}

TEST(ClusterBursts, ExtraBurstsDiscarded) {
  const auto r = cluster_bursts(ticks_from_us({20, 20.5, 60, 60.5, 100, 140}), 3);
  EXPECT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.discarded, 2u);
}

TEST(ClusterBursts, MeanWithinMemberRange) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::int64_t> step(1, 700);
  for (int trial = 0; trial < 300; ++trial) {
    EdgeTimestamps e;
    std::int64_t t = 1000;
    for (int i = 0; i < 12; ++i) e.rising_edges.push_back(t += step(rng));
    for (const auto& c : cluster_bursts(e, 1).clusters) {
      ASSERT_FALSE(c.member_ticks.empty());
      const auto [lo, hi] = std::minmax_element(c.member_ticks.begin(), c.member_ticks.end());
      EXPECT_GE(c.mean_tick, static_cast<double>(*lo));
      EXPECT_LE(c.mean_tick, static_cast<double>(*hi));
    }
  }
}

TEST(GateEchoCount, Boundaries) {
  EXPECT_EQ(gate_echo_count(8), GateResult::pass);
  EXPECT_EQ(gate_echo_count(5), GateResult::pass);
  EXPECT_EQ(gate_echo_count(4), GateResult::low_echo_alert);
  EXPECT_EQ(gate_echo_count(0), GateResult::low_echo_alert);
}

TEST(TickToDepth, HandValues) {
  EXPECT_NEAR(tick_to_depth(4324, 64.0), 50.00, 0.02);
  EXPECT_EQ(tick_to_depth(0, 64.0), 0.0);
  EXPECT_NEAR(tick_to_depth(9513, 64.0), 110.0, 0.02);
}

TEST(BuildPoints, NormalAndTiltedBeams) {
  const auto array = TransducerArray::default_patch();
  EchoCluster c;
  c.transducer_id = 3;
  c.mean_tick = round_trip_time(50.0, kSpeedOfSound) * 64.0;
  const auto p = build_points(std::vector<EchoCluster>{c}, array);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0].x, 7.5, 1e-12);
  EXPECT_NEAR(p[0].y, 7.5, 1e-12);
  EXPECT_NEAR(p[0].z, 50.0, 1e-9);

  const Vec3 v = Vec3(0.1, -0.2, 1.0).normalized();
  const TransducerArray tilted({TransducerElement{1, {-7.5, -7.5}, v}, TransducerElement{2, {7.5, -7.5}},
                                TransducerElement{3, {7.5, 7.5}}, TransducerElement{4, {-7.5, 7.5}}},
                               {30, 30}, Vec3(0, 0, 3));
  c.transducer_id = 1;
  const auto q = build_points(std::vector<EchoCluster>{c}, tilted);
  const Vec3 want = Vec3(-7.5, -7.5, 3) + 50.0 * v;
  EXPECT_NEAR((q[0].vec() - want).norm(), 0.0, 1e-9);
}

TEST(BuildPoints, EightClustersEightPoints) {
  EstimatorConfig cfg;
  std::vector<EchoCluster> clusters;
  for (int id = 1; id <= 4; ++id) {
    for (Wall w : {Wall::anterior, Wall::posterior}) {
      EchoCluster c;
      c.transducer_id = id;
      c.wall = w;
      c.mean_tick = (w == Wall::anterior ? 3000.0 : 9000.0);
      clusters.push_back(c);
    }
  }
  EXPECT_EQ(build_points(clusters, TransducerArray::default_patch(), cfg).size(), 8u);
}

TEST(BuildPoints, OnsetCorrectionShiftsDepth) {
  EstimatorConfig cfg;
  cfg.onset_correction_us = 1.25;
  EchoCluster c;
  c.transducer_id = 1;
  c.mean_tick = 6400;
  const auto p = build_points(std::vector<EchoCluster>{c}, TransducerArray::default_patch(), cfg);
  EXPECT_NEAR(p[0].z, kSpeedOfSound * (100.0 - 1.25) * 1e-3 / 2.0, 1e-9);
}

TEST(FitSphere, ExactRecoveryEightPoints) {
  const oracle::Sphere s{{0, 0, 60}, 39.08};
  std::mt19937_64 rng(0);
  const auto pts = to_points(oracle::sample_sphere(s, 8, rng));
  const auto fit = fit_sphere(pts);
  EXPECT_LT((fit.center - Vec3(0, 0, 60)).norm() / 60.0, 1e-6);
  EXPECT_NEAR(fit.radius, 39.08, 39.08 * 1e-6);
  EXPECT_LT(fit.rms_residual, 1e-6);
}

TEST(FitSphere, ExactRecoveryFromBeamCaps) {
  const oracle::Sphere s{{1.5, -2.0, 15 + 39.08}, 39.08};
  const auto fit = fit_sphere(to_points(cap_points(s)));
  EXPECT_NEAR(fit.radius, 39.08, 1e-6);
  EXPECT_LT(fit.rms_residual, 1e-6);
}

TEST(FitSphere, RegularTetrahedron) {
  const double a = 1.0 / std::sqrt(3.0);
  const std::vector<WallPoint> p{{a, a, a}, {a, -a, -a}, {-a, a, -a}, {-a, -a, a}};
  const auto fit = fit_sphere(p);
  EXPECT_LT(fit.center.norm(), 1e-12);
  EXPECT_NEAR(fit.radius, 1.0, 1e-12);
}

TEST(FitSphere, ThreePointsIsInsufficient) {
  const std::vector<WallPoint> p{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EXPECT_THROW(fit_sphere(p), InsufficientPointsError);
  EXPECT_THROW(fit_sphere(std::vector<WallPoint>{}), InsufficientPointsError);
}

TEST(FitSphere, CoplanarIsDegenerate) {
  const std::vector<WallPoint> p{{0, 0, 50}, {10, 0, 50}, {0, 10, 50}, {10, 10, 50}, {5, 3, 50}};
  EXPECT_THROW(fit_sphere(p), DegenerateGeometryError);
  // parallel normal beams at equal depth
  const std::vector<WallPoint> q{{-7.5, -7.5, 40}, {7.5, -7.5, 40}, {7.5, 7.5, 40}, {-7.5, 7.5, 40}};
  EXPECT_THROW(fit_sphere(q), DegenerateGeometryError);
  const std::vector<WallPoint> same(5, WallPoint{1, 2, 3});
  EXPECT_THROW(fit_sphere(same), DegenerateGeometryError);
}

TEST(FitSphere, IterationLimitIsConvergenceError) {
  EstimatorConfig cfg;
  cfg.fit.max_iterations = 0;
  std::mt19937_64 rng(1);
  auto pts = oracle::sample_sphere({{0, 0, 60}, 30}, 10, rng);
  std::normal_distribution<double> n(0, 1.0);
  for (auto& p : pts) p[2] += n(rng);
  EXPECT_THROW(fit_sphere(to_points(pts), cfg), ConvergenceError);
}

TEST(FitSphere, FourPointsMatchCircumsphereOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  int checked = 0;
  while (checked < 200) {
    std::array<oracle::P3, 4> p;
    for (auto& q : p) q = {u(rng), u(rng), u(rng) + 60};
    const auto want = oracle::circumsphere(p);
    if (!want || want->radius > 500) continue;
    std::vector<WallPoint> pts;
    for (const auto& q : p) pts.push_back({q[0], q[1], q[2]});
    SphereFit fit;
    try {
      fit = fit_sphere(pts);
    } catch (const DegenerateGeometryError&) {
      continue;
    }
    const Vec3 c(want->center[0], want->center[1], want->center[2]);
    EXPECT_LT((fit.center - c).norm(), 1e-9 * std::max(1.0, c.norm()));
    EXPECT_NEAR(fit.radius, want->radius, 1e-9 * want->radius);
    ++checked;
  }
}

TEST(FitSphere, TranslationEquivariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::normal_distribution<double> n(0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = oracle::sample_sphere({{0, 0, 60}, 35}, 8, rng);
    for (auto& p : pts) p[2] += n(rng);
    const auto base = fit_sphere(to_points(pts));
    const Vec3 v(u(rng), u(rng), u(rng));
    for (auto& p : pts) {
      p[0] += v.x();
      p[1] += v.y();
      p[2] += v.z();
    }
    const auto moved = fit_sphere(to_points(pts));
    EXPECT_LT((moved.center - base.center - v).norm(), 1e-9 * std::max(1.0, moved.center.norm()));
    EXPECT_NEAR(moved.radius, base.radius, 1e-9 * base.radius);
  }
}

TEST(FitSphere, RotationInvariance) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = oracle::sample_sphere({{5, -3, 60}, 35}, 8, rng);
    for (auto& p : pts) p[2] += n(rng);
    const auto base = fit_sphere(to_points(pts));
    const auto rot = oracle::rotation({u(rng), u(rng), u(rng)}, std::numbers::pi * u(rng));
    for (auto& p : pts) p = oracle::apply(rot, p);
    const auto turned = fit_sphere(to_points(pts));
    EXPECT_NEAR(turned.radius, base.radius, 1e-9 * base.radius);
    EXPECT_NEAR(turned.rms_residual, base.rms_residual, 1e-9 * std::max(base.rms_residual, 1e-3));
  }
}

TEST(FitSphere, NoiseRobustness) {
  // 8 beam-cap points of a 40 mm sphere, Gaussian depth noise.
  const oracle::Sphere s{{0, 0, 55}, 40.0};
  const double truth = oracle::sphere_ml(40.0);
  const auto clean = cap_points(s);
  std::mt19937_64 rng(15);
  for (double sigma : {0.1, 0.5}) {
    std::normal_distribution<double> n(0.0, sigma);
    int within = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      auto pts = clean;
      for (auto& p : pts) p[2] += n(rng);
      try {
        const double v = sphere_volume(fit_sphere(to_points(pts)));
        if (std::abs(v - truth) / truth < 0.05) ++within;
      } catch (const Error&) {
      }
    }
    EXPECT_GE(within, 950) << "sigma " << sigma;
  }
}

TEST(SphereVolume, HandValues) {
  SphereFit f;
  f.radius = 39.08;
  EXPECT_NEAR(sphere_volume(f), 250.0, 0.2);
  f.radius = 10;
  EXPECT_NEAR(sphere_volume(f), 4.19, 0.005);
  f.radius = 62.04;
  EXPECT_NEAR(sphere_volume(f), 1000.0, 1.0);
}

TEST(ClinicalEllipsoid, HandValues) {
  EXPECT_NEAR(clinical_ellipsoid_volume(10, 10, 10), 520.0, 1e-9);
  for (double d : {3.0, 7.8, 11.5}) {
    const double ratio = clinical_ellipsoid_volume(d, d, d) / (std::numbers::pi / 6.0 * d * d * d);
    EXPECT_NEAR(ratio, 0.52 / (std::numbers::pi / 6.0), 1e-12);
    EXPECT_NEAR(ratio, 0.993, 1e-3);
  }
  EXPECT_THROW(clinical_ellipsoid_volume(0, 1, 1), ParameterError);
  EXPECT_THROW(clinical_ellipsoid_volume(1, -1, 1), ParameterError);
}

TEST(ProcessSweep, FullSphereSweep) {
  const oracle::Sphere s{{0, 0, 15 + 39.08}, 39.08};
  const auto est = process_sweep(synthetic_sweep(sphere_walls(s)), TransducerArray::default_patch());
  EXPECT_EQ(est.quality, Quality::ok);
  EXPECT_EQ(est.point_count, 8u);
  EXPECT_NEAR(est.volume_ml, 250.0, 0.02 * 250.0);
  EXPECT_EQ(est.volume_ml, std::round(est.volume_ml * 10.0) / 10.0);
}

TEST(ProcessSweep, SilentTransducerStillFits) {
  const oracle::Sphere s{{0, 0, 15 + 39.08}, 39.08};
  const auto est = process_sweep(synthetic_sweep(sphere_walls(s, {1, 2, 4})), TransducerArray::default_patch());
  EXPECT_EQ(est.point_count, 6u);
  EXPECT_EQ(est.quality, Quality::ok);
  EXPECT_GT(est.volume_ml, 0.0);
}

TEST(ProcessSweep, FourClustersAlert) {
  const oracle::Sphere s{{0, 0, 15 + 39.08}, 39.08};
  const auto est = process_sweep(synthetic_sweep(sphere_walls(s, {1, 4})), TransducerArray::default_patch());
  EXPECT_EQ(est.point_count, 4u);
  EXPECT_EQ(est.quality, Quality::low_echo_alert);
  EXPECT_EQ(est.volume_ml, 0.0);
  EXPECT_FALSE(est.fit);
}

TEST(ProcessSweep, AllOverflowIsInsufficient) {
  const oracle::Sphere s{{0, 0, 15 + 39.08}, 39.08};
  EXPECT_THROW(process_sweep(synthetic_sweep(sphere_walls(s), kFlagOverflow), TransducerArray::default_patch()),
               InsufficientPointsError);
  EXPECT_THROW(process_sweep(SweepBuffer{}, TransducerArray::default_patch()), InsufficientPointsError);
}

TEST(ProcessSweep, OverflowFramesMasked) {
  const oracle::Sphere s{{0, 0, 15 + 39.08}, 39.08};
  auto sweep = synthetic_sweep(sphere_walls(s));
  const auto bad = synthetic_sweep({{3, {20.0, 30.0, 40.0}}}, kFlagOverflow);
  sweep.frames.insert(sweep.frames.end(), bad.frames.begin(), bad.frames.end());
  const auto est = process_sweep(sweep, TransducerArray::default_patch());
  EXPECT_EQ(est.masked_frames, bad.frames.size());
  EXPECT_EQ(est.point_count, 8u);
  EXPECT_NEAR(est.volume_ml, 250.0, 5.0);
}

TEST(ProcessSweep, FillingSequenceIsMonotone) {
  double prev = 0.0;
  for (double v = 84.0; v <= 800.0; v += 29.0) {
    const double r = std::cbrt(3.0 * v * 1000.0 / (4.0 * std::numbers::pi));
    const auto est = process_sweep(synthetic_sweep(sphere_walls({{0, 0, 15 + r}, r})),
                                   TransducerArray::default_patch());
    EXPECT_GT(est.volume_ml, prev) << v;
    prev = est.volume_ml;
  }
}
