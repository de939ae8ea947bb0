#include "ubvm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "ubvm/error.hpp"

namespace ubvm {
namespace {

EchoCluster make_cluster(int id, Wall wall, std::vector<std::int64_t> ticks) {
  EchoCluster c;
  c.transducer_id = id;
  c.wall = wall;
  const double sum = std::accumulate(ticks.begin(), ticks.end(), 0.0,
                                     [](double acc, std::int64_t t) { return acc + static_cast<double>(t); });
  c.mean_tick = sum / static_cast<double>(ticks.size());
  c.member_ticks = std::move(ticks);
  return c;
}

double sphere_cost(std::span<const WallPoint> points, const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
  const Vec3 c = x.head<3>();
  const double r = x[3];
  double cost = 0.0;
  grad.setZero();
  for (const auto& p : points) {
    const Vec3 d = c - p.vec();
    const double dist = d.norm();
    const double res = dist - r;
    cost += res * res;
    if (dist > 0.0) grad.head<3>() += 2.0 * res * d / dist;
    grad[3] -= 2.0 * res;
  }
  return cost;
}

}  // namespace

ClusterResult cluster_bursts(const EdgeTimestamps& ticks, int transducer_id, double gap_threshold_us) {
  ClusterResult out;
  const auto& edges = ticks.rising_edges;
  if (edges.empty()) return out;
  const double gap_ticks = gap_threshold_us * ticks.tick_rate;

  std::vector<std::vector<std::int64_t>> bursts;
  bursts.push_back({edges.front()});
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (static_cast<double>(edges[i] - edges[i - 1]) < gap_ticks) {
      bursts.back().push_back(edges[i]);
    } else {
      bursts.push_back({edges[i]});
    }
  }
  out.clusters.push_back(make_cluster(transducer_id, Wall::anterior, std::move(bursts[0])));
  if (bursts.size() > 1) {
    out.clusters.push_back(make_cluster(transducer_id, Wall::posterior, std::move(bursts[1])));
  }
  out.discarded = bursts.size() > 2 ? bursts.size() - 2 : 0;
  return out;
}

GateResult gate_echo_count(std::size_t cluster_count) {
  return cluster_count < kMinEchoesForFit ? GateResult::low_echo_alert : GateResult::pass;
}

double tick_to_depth(double mean_tick, double tick_rate, double speed_m_per_s) {
  const double t_us = mean_tick / tick_rate;
  return speed_m_per_s * t_us * 1e-3 / 2.0;
}

std::vector<WallPoint> build_points(std::span<const EchoCluster> clusters,
                                    const TransducerArray& array, const EstimatorConfig& cfg) {
  std::vector<WallPoint> points;
  points.reserve(clusters.size());
  for (const auto& c : clusters) {
    const TransducerElement& e = array.element(c.transducer_id);
    const double corrected = c.mean_tick - cfg.onset_correction_us * cfg.tick_rate;
    const double depth = tick_to_depth(corrected, cfg.tick_rate, cfg.speed_of_sound);
    const Vec3 p = array.world_position(e) + depth * e.beam_direction;
    points.push_back({p.x(), p.y(), p.z()});
  }
  return points;
}

AlgebraicSphere algebraic_sphere_fit(std::span<const WallPoint> points, double max_condition_number) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (points.size() < kMinPointsForSphere) {
    throw InsufficientPointsError("sphere fit needs at least 4 points, got " +
                                  std::to_string(points.size()));
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p.vec();
  mean /= static_cast<double>(n);
  double scale = 0.0;
  for (const auto& p : points) scale += (p.vec() - mean).squaredNorm();
  scale = std::sqrt(scale / static_cast<double>(n));
  if (!(scale > 0.0)) throw DegenerateGeometryError("all points coincide");

  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 q = (points[static_cast<std::size_t>(i)].vec() - mean) / scale;
    a.row(i) << 2.0 * q.x(), 2.0 * q.y(), 2.0 * q.z(), 1.0;
    b[i] = q.squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[3] > 0.0 ? sv[0] / sv[3] : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition_number)) {
    throw DegenerateGeometryError("sphere system condition number " + std::to_string(cond) +
                                  " exceeds bound");
  }
  const Eigen::Vector4d sol = svd.solve(b);
  const Vec3 c = sol.head<3>();
  const double r2 = sol[3] + c.squaredNorm();
  if (!(r2 > 0.0)) throw DegenerateGeometryError("linearised fit produced no real sphere");
  return {mean + scale * c, scale * std::sqrt(r2), cond};
}

SphereFit fit_sphere(std::span<const WallPoint> points, const EstimatorConfig& cfg) {
  const AlgebraicSphere init = algebraic_sphere_fit(points, cfg.max_condition_number);
  Eigen::VectorXd x0(4);
  x0 << init.center, init.radius;
  const BfgsResult res = minimize_bfgs(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return sphere_cost(points, x, g); }, x0,
      cfg.fit);
  if (res.status != BfgsStatus::converged) {
    std::ostringstream msg;
    msg << "sphere fit did not converge ("
        << (res.status == BfgsStatus::line_search_failed ? "line search failed" : "iteration limit")
        << " after " << res.iterations << " iterations, gradient norm " << res.gradient_norm << ")";
    throw ConvergenceError(msg.str());
  }
  SphereFit fit;
  fit.center = res.x.head<3>();
  fit.radius = res.x[3];
  fit.rms_residual = std::sqrt(res.value / static_cast<double>(points.size()));
  fit.iterations = res.iterations;
  if (!(fit.radius > 0.0)) throw DegenerateGeometryError("fitted radius is not positive");
  return fit;
}

double sphere_volume(const SphereFit& fit) { return sphere_volume_ml(fit.radius); }

double clinical_ellipsoid_volume(double length_cm, double width_cm, double height_cm) {
  if (!(length_cm > 0.0 && width_cm > 0.0 && height_cm > 0.0)) {
    throw ParameterError("clinical volume needs three positive diameters");
  }
  // cm^3 == mL
  return 0.52 * length_cm * width_cm * height_cm;
}

VolumeEstimate process_sweep(const SweepBuffer& sweep, const TransducerArray& array,
                             const EstimatorConfig& cfg) {
  VolumeEstimate est;
  std::vector<EchoCluster> clusters;
  for (int id = 1; id <= TransducerArray::kElementCount; ++id) {
    EdgeTimestamps ticks;
    ticks.tick_rate = cfg.tick_rate;
    for (const auto& f : sweep.frames) {
      if (f.transducer_id() != id) continue;
      if (f.overflow()) {
        ++est.masked_frames;
        continue;
      }
      ticks.rising_edges.push_back(f.timestamp_ticks());
    }
    std::sort(ticks.rising_edges.begin(), ticks.rising_edges.end());
    ticks.rising_edges.erase(std::unique(ticks.rising_edges.begin(), ticks.rising_edges.end()),
                             ticks.rising_edges.end());
    ClusterResult r = cluster_bursts(ticks, id, cfg.gap_threshold_us);
    est.discarded_clusters += r.discarded;
    for (auto& c : r.clusters) clusters.push_back(std::move(c));
  }

  est.point_count = clusters.size();
  if (clusters.size() < kMinPointsForSphere) {
    throw InsufficientPointsError("only " + std::to_string(clusters.size()) +
                                  " usable echoes in sweep; a sphere needs 4");
  }
  if (gate_echo_count(clusters) == GateResult::low_echo_alert) {
    est.quality = Quality::low_echo_alert;
    return est;
  }

  const std::vector<WallPoint> points = build_points(clusters, array, cfg);
  est.fit = fit_sphere(points, cfg);
  est.volume_ml = std::round(sphere_volume(*est.fit) * 10.0) / 10.0;
  return est;
}

const char* to_string(Quality q) noexcept {
  switch (q) {
    case Quality::ok: return "ok";
    case Quality::low_echo_alert: return "low_echo_alert";
  }
  return "unknown";
}

}  // namespace ubvm
