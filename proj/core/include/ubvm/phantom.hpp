#pragma once

// Bladder geometry, tissue medium, transducer patch layout and fill profiles.
//
// Lengths are millimetres, volumes millilitres (1 mL = 1000 mm^3). The patch
// plane is z = origin.z and beams point into the body along +z by default.

#include <array>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace ubvm {

using Vec3 = Eigen::Vector3d;

constexpr double kMm3PerMl = 1000.0;

struct SphereShape {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

// Axis-aligned ellipsoid.
struct EllipsoidShape {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Zero();
};

// Round-bottom flask: spherical body plus a cylindrical neck along
// neck_axis. The neck rises neck_length above the rim where its wall meets
// the sphere.
struct FlaskShape {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  double neck_radius = 10.0;
  double neck_length = 30.0;
  Vec3 neck_axis = Vec3::UnitZ();
};

class BladderPhantom {
 public:
  using Shape = std::variant<SphereShape, EllipsoidShape, FlaskShape>;

  // Throws ParameterError if any radius or semi-axis is not strictly positive
  // or the volume is not finite.
  explicit BladderPhantom(Shape shape);

  static BladderPhantom sphere(const Vec3& center, double radius);
  static BladderPhantom ellipsoid(const Vec3& center, const Vec3& semi_axes);
  static BladderPhantom flask(const Vec3& center, double radius,
                              double neck_radius = 10.0,
                              double neck_length = 30.0,
                              const Vec3& neck_axis = Vec3::UnitZ());
  static BladderPhantom sphere_with_volume(const Vec3& center, double volume_ml);

  const Shape& shape() const noexcept { return shape_; }

  // Principal diameters (mm) of the bladder body, as a clinician would
  // caliper them. The flask neck is not part of the body.
  std::array<double, 3> body_diameters() const;

 private:
  Shape shape_;
};

double sphere_volume_ml(double radius_mm);
double sphere_radius_for_volume(double volume_ml);

double phantom_volume(const BladderPhantom& phantom);

struct TissueMedium {
  double speed_of_sound = 1480.0;     // m/s
  double attenuation_coeff = 0.3;     // dB / (cm MHz)
  double pre_wall_offset = 15.0;      // mm

  void validate() const;
};

struct TransducerElement {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // on the patch plane
  Vec3 beam_direction = Vec3::UnitZ();
};

class TransducerArray {
 public:
  static constexpr int kElementCount = 4;

  // Throws ParameterError unless there are exactly four elements with ids
  // 1..4, unit beam directions, and positions inside the patch.
  TransducerArray(std::array<TransducerElement, kElementCount> elements,
                  Eigen::Vector2d patch_extent, Vec3 origin = Vec3::Zero());

  // 2x2 grid, 15 mm pitch, centred on a 30 x 30 mm patch, normal beams.
  // Ids run around the ring: 1 (-,-), 2 (+,-), 3 (+,+), 4 (-,+).
  static TransducerArray default_patch(const Vec3& origin = Vec3::Zero());

  const std::array<TransducerElement, kElementCount>& elements() const noexcept {
    return elements_;
  }
  const TransducerElement& element(int id) const;
  const Eigen::Vector2d& patch_extent() const noexcept { return patch_extent_; }
  const Vec3& origin() const noexcept { return origin_; }

  Vec3 world_position(const TransducerElement& e) const;

  TransducerArray translated(const Vec3& offset) const;

 private:
  std::array<TransducerElement, kElementCount> elements_;
  Eigen::Vector2d patch_extent_;
  Vec3 origin_;
};

struct WallDepths {
  double anterior = 0.0;
  double posterior = 0.0;
};

// Indexed by element position in TransducerArray::elements(); nullopt means
// the beam missed the phantom.
using ElementHits = std::array<std::optional<WallDepths>, TransducerArray::kElementCount>;

// Entry/exit depths along a single ray. Only intersections at t >= 0 count;
// a ray that starts inside or grazes the phantom is a miss. For a flask the
// body and neck are treated as one solid: first entry and last exit.
std::optional<WallDepths> ray_intersection(const Vec3& origin, const Vec3& direction,
                                           const BladderPhantom& phantom);

ElementHits wall_intersections(const TransducerArray& array,
                               const BladderPhantom& phantom);

class MicturitionProfile {
 public:
  struct Sample {
    double time_min;
    double volume_ml;
  };

  // Times must be strictly increasing and volumes non-negative.
  explicit MicturitionProfile(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  double start() const noexcept { return samples_.front().time_min; }
  double end() const noexcept { return samples_.back().time_min; }

  // Throws RangeError outside [start(), end()].
  double volume_at(double t_min) const;

 private:
  std::vector<Sample> samples_;
};

inline double profile_volume_at(const MicturitionProfile& p, double t_min) {
  return p.volume_at(t_min);
}

}  // namespace ubvm
