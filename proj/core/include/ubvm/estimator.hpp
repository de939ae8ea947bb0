#pragma once

// Timestamp-to-volume processing: burst clustering, the echo-count gate,
// depth conversion, least-squares sphere fitting and volume formulas.
//
// Internal units are mm and us; volumes are mL.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ubvm/afe.hpp"
#include "ubvm/bfgs.hpp"
#include "ubvm/link.hpp"
#include "ubvm/phantom.hpp"

namespace ubvm {

enum class Wall { anterior, posterior };

struct EchoCluster {
  int transducer_id = 0;
  Wall wall = Wall::anterior;
  std::vector<std::int64_t> member_ticks;
  double mean_tick = 0.0;
};

struct ClusterResult {
  std::vector<EchoCluster> clusters;  // at most two
  std::size_t discarded = 0;          // bursts beyond the second
};

// Splits sorted ticks into bursts wherever consecutive edges are at least
// gap_threshold_us apart. The first burst is the anterior wall, the second
// the posterior wall; later bursts are counted and dropped.
ClusterResult cluster_bursts(const EdgeTimestamps& ticks, int transducer_id,
                             double gap_threshold_us = 5.0);

enum class GateResult { pass, low_echo_alert };

constexpr std::size_t kMinEchoesForFit = 5;
constexpr std::size_t kMinPointsForSphere = 4;

GateResult gate_echo_count(std::size_t cluster_count);
inline GateResult gate_echo_count(std::span<const EchoCluster> clusters) {
  return gate_echo_count(clusters.size());
}

constexpr double kSpeedOfSound = 1480.0;  // m/s

// One-way depth (mm) of a reflector whose echo arrives at tick / tick_rate.
double tick_to_depth(double mean_tick, double tick_rate, double speed_m_per_s = kSpeedOfSound);

struct WallPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
};

struct EstimatorConfig {
  double tick_rate = 64.0;                  // MHz
  double speed_of_sound = kSpeedOfSound;    // m/s
  double gap_threshold_us = 5.0;
  // Subtracted from the averaged echo time before depth conversion.
  double onset_correction_us = 0.0;
  BfgsOptions fit{};
  double max_condition_number = 1e8;
};

// Each cluster becomes element position + depth * beam direction.
std::vector<WallPoint> build_points(std::span<const EchoCluster> clusters,
                                    const TransducerArray& array, const EstimatorConfig& cfg = {});

struct SphereFit {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  double rms_residual = 0.0;
  std::size_t iterations = 0;
};

struct AlgebraicSphere {
  Vec3 center;
  double radius;
  double condition_number;
};

// Linearised fit |p|^2 = 2 c.p + (r^2 - |c|^2) on centred, scaled points.
// Throws InsufficientPointsError below four points and
// DegenerateGeometryError when the system's condition number exceeds
// max_condition_number.
AlgebraicSphere algebraic_sphere_fit(std::span<const WallPoint> points,
                                     double max_condition_number = 1e8);

// Geometric least squares sum (|p - c| - r)^2, BFGS from the algebraic
// solution. Throws as algebraic_sphere_fit, plus ConvergenceError.
SphereFit fit_sphere(std::span<const WallPoint> points, const EstimatorConfig& cfg = {});

double sphere_volume(const SphereFit& fit);

// 0.52 * L * W * H with diameters in cm; result in mL.
double clinical_ellipsoid_volume(double length_cm, double width_cm, double height_cm);

enum class Quality { ok, low_echo_alert };

struct VolumeEstimate {
  double volume_ml = 0.0;  // rounded to 0.1 mL; 0 when alerted
  std::size_t point_count = 0;
  Quality quality = Quality::ok;
  std::optional<SphereFit> fit;
  std::size_t masked_frames = 0;
  std::size_t discarded_clusters = 0;
};

// mask overflow frames, cluster per transducer, gate, average, convert to
// points, fit, volume. Fewer than four usable echoes throws
// InsufficientPointsError; four gives a low-echo alert without a volume.
VolumeEstimate process_sweep(const SweepBuffer& sweep, const TransducerArray& array,
                             const EstimatorConfig& cfg = {});

const char* to_string(Quality q) noexcept;

}  // namespace ubvm
