#include "ubvm/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "ubvm/error.hpp"

namespace ubvm {
namespace {

struct Interval {
  double enter;
  double exit;
};

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Parametric interval where |o + t d - c|^2 < r^2, or nullopt when the ray
// misses or is tangent.
std::optional<Interval> sphere_interval(const Vec3& o, const Vec3& d, const Vec3& c,
                                        double r) {
  const Vec3 oc = o - c;
  const double a = d.squaredNorm();
  const double b = oc.dot(d);
  const double q = oc.squaredNorm() - r * r;
  const double disc = b * b - a * q;
  if (!(disc > 0.0)) return std::nullopt;
  const double s = std::sqrt(disc);
  return Interval{(-b - s) / a, (-b + s) / a};
}

std::optional<Interval> ellipsoid_interval(const Vec3& o, const Vec3& d,
                                           const EllipsoidShape& e) {
  const Vec3 so = (o - e.center).cwiseQuotient(e.semi_axes);
  const Vec3 sd = d.cwiseQuotient(e.semi_axes);
  return sphere_interval(so, sd, Vec3::Zero(), 1.0);
}

// Finite capped cylinder: axis from base along unit axis for length len.
std::optional<Interval> cylinder_interval(const Vec3& o, const Vec3& d, const Vec3& base,
                                          const Vec3& axis, double radius, double len) {
  const Vec3 ob = o - base;
  const double o_ax = ob.dot(axis);
  const double d_ax = d.dot(axis);

  // Slab between the two caps.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  if (std::abs(d_ax) < 1e-15) {
    if (o_ax <= 0.0 || o_ax >= len) return std::nullopt;
  } else {
    double t0 = (0.0 - o_ax) / d_ax;
    double t1 = (len - o_ax) / d_ax;
    if (t0 > t1) std::swap(t0, t1);
    lo = t0;
    hi = t1;
  }

  // Infinite cylinder in the plane perpendicular to the axis.
  const Vec3 op = ob - o_ax * axis;
  const Vec3 dp = d - d_ax * axis;
  const double a = dp.squaredNorm();
  const double q = op.squaredNorm() - radius * radius;
  if (a < 1e-15) {
    if (q >= 0.0) return std::nullopt;
  } else {
    const double b = op.dot(dp);
    const double disc = b * b - a * q;
    if (!(disc > 0.0)) return std::nullopt;
    const double s = std::sqrt(disc);
    lo = std::max(lo, (-b - s) / a);
    hi = std::min(hi, (-b + s) / a);
  }
  if (!(hi > lo)) return std::nullopt;
  return Interval{lo, hi};
}

std::optional<WallDepths> to_depths(std::optional<Interval> iv) {
  if (!iv || iv->enter < 0.0) return std::nullopt;
  return WallDepths{iv->enter, iv->exit};
}

}  // namespace

double sphere_volume_ml(double radius_mm) {
  return 4.0 / 3.0 * std::numbers::pi * radius_mm * radius_mm * radius_mm / kMm3PerMl;
}

double sphere_radius_for_volume(double volume_ml) {
  if (!positive_finite(volume_ml)) {
    throw ParameterError("sphere volume must be positive, got " + std::to_string(volume_ml));
  }
  return std::cbrt(3.0 * volume_ml * kMm3PerMl / (4.0 * std::numbers::pi));
}

BladderPhantom::BladderPhantom(Shape shape) : shape_(std::move(shape)) {
  std::visit(
      [](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SphereShape>) {
          if (!positive_finite(s.radius)) throw ParameterError("sphere radius must be > 0");
        } else if constexpr (std::is_same_v<T, EllipsoidShape>) {
          for (int i = 0; i < 3; ++i) {
            if (!positive_finite(s.semi_axes[i])) {
              throw ParameterError("ellipsoid semi-axes must be > 0");
            }
          }
        } else {
          if (!positive_finite(s.radius)) throw ParameterError("flask radius must be > 0");
          if (!positive_finite(s.neck_radius) || s.neck_radius >= s.radius) {
            throw ParameterError("flask neck radius must be in (0, radius)");
          }
          if (!(s.neck_length >= 0.0) || !std::isfinite(s.neck_length)) {
            throw ParameterError("flask neck length must be >= 0");
          }
          const double n = s.neck_axis.norm();
          if (!positive_finite(n)) throw ParameterError("flask neck axis must be non-zero");
          s.neck_axis /= n;
        }
        if (!s.center.allFinite()) throw ParameterError("phantom centre must be finite");
      },
      shape_);
  if (!positive_finite(phantom_volume(*this))) {
    throw ParameterError("phantom volume must be finite and positive");
  }
}

BladderPhantom BladderPhantom::sphere(const Vec3& center, double radius) {
  return BladderPhantom(SphereShape{center, radius});
}

BladderPhantom BladderPhantom::ellipsoid(const Vec3& center, const Vec3& semi_axes) {
  return BladderPhantom(EllipsoidShape{center, semi_axes});
}

BladderPhantom BladderPhantom::flask(const Vec3& center, double radius, double neck_radius,
                                     double neck_length, const Vec3& neck_axis) {
  return BladderPhantom(FlaskShape{center, radius, neck_radius, neck_length, neck_axis});
}

BladderPhantom BladderPhantom::sphere_with_volume(const Vec3& center, double volume_ml) {
  return sphere(center, sphere_radius_for_volume(volume_ml));
}

std::array<double, 3> BladderPhantom::body_diameters() const {
  return std::visit(
      [](const auto& s) -> std::array<double, 3> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EllipsoidShape>) {
          return {2.0 * s.semi_axes.x(), 2.0 * s.semi_axes.y(), 2.0 * s.semi_axes.z()};
        } else {
          return {2.0 * s.radius, 2.0 * s.radius, 2.0 * s.radius};
        }
      },
      shape_);
}

double phantom_volume(const BladderPhantom& phantom) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SphereShape>) {
          return sphere_volume_ml(s.radius);
        } else if constexpr (std::is_same_v<T, EllipsoidShape>) {
          return 4.0 / 3.0 * std::numbers::pi * s.semi_axes.prod() / kMm3PerMl;
        } else {
          // Neck cylinder from the rim plane up, minus the spherical cap it
          // shares with the body.
          const double inner = std::sqrt(s.radius * s.radius - s.neck_radius * s.neck_radius);
          const double h = s.radius - inner;
          const double neck = std::numbers::pi * s.neck_radius * s.neck_radius * s.neck_length;
          const double cap = std::numbers::pi * h * h * (3.0 * s.radius - h) / 3.0;
          return sphere_volume_ml(s.radius) + (neck - cap) / kMm3PerMl;
        }
      },
      phantom.shape());
}

void TissueMedium::validate() const {
  if (!positive_finite(speed_of_sound)) throw ParameterError("speed of sound must be > 0");
  if (!(attenuation_coeff >= 0.0) || !std::isfinite(attenuation_coeff)) {
    throw ParameterError("attenuation coefficient must be >= 0");
  }
  if (!(pre_wall_offset >= 0.0) || !std::isfinite(pre_wall_offset)) {
    throw ParameterError("pre-wall offset must be >= 0");
  }
}

TransducerArray::TransducerArray(std::array<TransducerElement, kElementCount> elements,
                                 Eigen::Vector2d patch_extent, Vec3 origin)
    : elements_(std::move(elements)), patch_extent_(patch_extent), origin_(origin) {
  if (!positive_finite(patch_extent_.x()) || !positive_finite(patch_extent_.y())) {
    throw ParameterError("patch extent must be positive");
  }
  std::set<int> ids;
  for (auto& e : elements_) {
    if (e.id < 1 || e.id > kElementCount) {
      throw ParameterError("transducer id out of range 1..4: " + std::to_string(e.id));
    }
    ids.insert(e.id);
    if (std::abs(e.position.x()) > patch_extent_.x() / 2.0 ||
        std::abs(e.position.y()) > patch_extent_.y() / 2.0) {
      throw ParameterError("transducer " + std::to_string(e.id) + " lies outside the patch");
    }
    const double n = e.beam_direction.norm();
    if (!positive_finite(n)) throw ParameterError("beam direction must be non-zero");
    if (std::abs(n - 1.0) > 1e-9) {
      throw ParameterError("beam direction of transducer " + std::to_string(e.id) +
                           " is not a unit vector");
    }
  }
  if (ids.size() != kElementCount) throw ParameterError("transducer ids must be distinct");
}

TransducerArray TransducerArray::default_patch(const Vec3& origin) {
  constexpr double h = 7.5;
  return TransducerArray({TransducerElement{1, {-h, -h}, Vec3::UnitZ()},
                          TransducerElement{2, {h, -h}, Vec3::UnitZ()},
                          TransducerElement{3, {h, h}, Vec3::UnitZ()},
                          TransducerElement{4, {-h, h}, Vec3::UnitZ()}},
                         {30.0, 30.0}, origin);
}

const TransducerElement& TransducerArray::element(int id) const {
  for (const auto& e : elements_) {
    if (e.id == id) return e;
  }
  throw ParameterError("no transducer with id " + std::to_string(id));
}

Vec3 TransducerArray::world_position(const TransducerElement& e) const {
  return origin_ + Vec3(e.position.x(), e.position.y(), 0.0);
}

TransducerArray TransducerArray::translated(const Vec3& offset) const {
  return TransducerArray(elements_, patch_extent_, origin_ + offset);
}

std::optional<WallDepths> ray_intersection(const Vec3& origin, const Vec3& direction,
                                           const BladderPhantom& phantom) {
  return std::visit(
      [&](const auto& s) -> std::optional<WallDepths> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SphereShape>) {
          return to_depths(sphere_interval(origin, direction, s.center, s.radius));
        } else if constexpr (std::is_same_v<T, EllipsoidShape>) {
          return to_depths(ellipsoid_interval(origin, direction, s));
        } else {
          const double inner = std::sqrt(s.radius * s.radius - s.neck_radius * s.neck_radius);
          auto body = sphere_interval(origin, direction, s.center, s.radius);
          auto neck = cylinder_interval(origin, direction, s.center, s.neck_axis,
                                        s.neck_radius, inner + s.neck_length);
          if (!body) return to_depths(neck);
          if (!neck) return to_depths(body);
          return to_depths(Interval{std::min(body->enter, neck->enter),
                                    std::max(body->exit, neck->exit)});
        }
      },
      phantom.shape());
}

ElementHits wall_intersections(const TransducerArray& array, const BladderPhantom& phantom) {
  ElementHits hits;
  for (std::size_t i = 0; i < array.elements().size(); ++i) {
    const auto& e = array.elements()[i];
    hits[i] = ray_intersection(array.world_position(e), e.beam_direction, phantom);
  }
  return hits;
}

MicturitionProfile::MicturitionProfile(std::vector<Sample> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw ParameterError("micturition profile needs at least one sample");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i].time_min) || !std::isfinite(samples_[i].volume_ml)) {
      throw ParameterError("micturition profile samples must be finite");
    }
    if (samples_[i].volume_ml < 0.0) throw ParameterError("profile volumes must be >= 0");
    if (i > 0 && !(samples_[i].time_min > samples_[i - 1].time_min)) {
      throw ParameterError("profile times must be strictly increasing");
    }
  }
}

double MicturitionProfile::volume_at(double t_min) const {
  if (!(t_min >= start() && t_min <= end())) {
    throw RangeError("time " + std::to_string(t_min) + " min outside profile range [" +
                     std::to_string(start()) + ", " + std::to_string(end()) + "]");
  }
  auto hi = std::lower_bound(samples_.begin(), samples_.end(), t_min,
                             [](const Sample& s, double t) { return s.time_min < t; });
  if (hi->time_min == t_min) return hi->volume_ml;
  auto lo = std::prev(hi);
  const double w = (t_min - lo->time_min) / (hi->time_min - lo->time_min);
  return lo->volume_ml + w * (hi->volume_ml - lo->volume_ml);
}

}  // namespace ubvm
