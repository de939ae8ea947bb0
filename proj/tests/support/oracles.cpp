#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace oracle {

std::optional<Sphere> circumsphere(const std::array<P3, 4>& p) {
  // 2 (p_i - p_0) . c = |p_i|^2 - |p_0|^2, i = 1..3
  double m[3][4];
  const double n0 = p[0][0] * p[0][0] + p[0][1] * p[0][1] + p[0][2] * p[0][2];
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) {
    const P3& q = p[static_cast<std::size_t>(i + 1)];
    for (int j = 0; j < 3; ++j) {
      m[i][j] = 2.0 * (q[static_cast<std::size_t>(j)] - p[0][static_cast<std::size_t>(j)]);
      scale = std::max(scale, std::abs(m[i][j]));
    }
    m[i][3] = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] - n0;
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-12 * scale) return std::nullopt;
    if (piv != col) {
      for (int k = 0; k < 4; ++k) std::swap(m[piv][k], m[col][k]);
    }
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  P3 c{};
  for (int i = 2; i >= 0; --i) {
    double acc = m[i][3];
    for (int k = i + 1; k < 3; ++k) acc -= m[i][k] * c[static_cast<std::size_t>(k)];
    c[static_cast<std::size_t>(i)] = acc / m[i][i];
  }
  const double dx = p[0][0] - c[0], dy = p[0][1] - c[1], dz = p[0][2] - c[2];
  return Sphere{c, std::sqrt(dx * dx + dy * dy + dz * dz)};
}

std::optional<std::pair<double, double>> ray_sphere(const P3& o, const P3& d, const P3& c, double r) {
  const P3 oc{o[0] - c[0], o[1] - c[1], o[2] - c[2]};
  const double a = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  const double b = 2.0 * (oc[0] * d[0] + oc[1] * d[1] + oc[2] * d[2]);
  const double cc = oc[0] * oc[0] + oc[1] * oc[1] + oc[2] * oc[2] - r * r;
  const double disc = b * b - 4.0 * a * cc;
  if (disc <= 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t0 = (-b - s) / (2.0 * a);
  const double t1 = (-b + s) / (2.0 * a);
  if (t0 < 0.0) return std::nullopt;
  return std::make_pair(t0, t1);
}

std::optional<std::pair<double, double>> ray_ellipsoid(const P3& o, const P3& d, const P3& c,
                                                       const P3& semi) {
  const P3 os{(o[0] - c[0]) / semi[0], (o[1] - c[1]) / semi[1], (o[2] - c[2]) / semi[2]};
  const P3 ds{d[0] / semi[0], d[1] / semi[1], d[2] / semi[2]};
  return ray_sphere(os, ds, {0.0, 0.0, 0.0}, 1.0);
}

double rc_lowpass_gain(double f, double fc) { return 1.0 / std::sqrt(1.0 + (f / fc) * (f / fc)); }

double sphere_ml(double r_mm) { return 4.0 / 3.0 * std::numbers::pi * r_mm * r_mm * r_mm / 1000.0; }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<P3> sample_sphere(const Sphere& s, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<P3> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = g(rng), y = g(rng), z = g(rng);
    const double len = std::sqrt(x * x + y * y + z * z);
    if (len < 1e-6) continue;
    out.push_back({s.center[0] + s.radius * x / len, s.center[1] + s.radius * y / len,
                   s.center[2] + s.radius * z / len});
  }
  return out;
}

std::array<double, 9> rotation(const P3& axis, double angle) {
  const double len = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  const double x = axis[0] / len, y = axis[1] / len, z = axis[2] / len;
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
          t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
          t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

P3 apply(const std::array<double, 9>& m, const P3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

}  // namespace oracle
