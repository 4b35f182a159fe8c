#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace hapcompass {

struct ForceTag {};
struct TorqueTag {};
struct LengthTag {};

/// Cartesian 3-vector carrying a physical quantity tag so forces, torques and
/// positions cannot be mixed by accident.
template <class Tag>
struct Vector3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vector3 operator+(const Vector3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vector3 operator-(const Vector3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vector3 operator-() const { return {-x, -y, -z}; }
  constexpr Vector3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vector3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vector3& operator+=(const Vector3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vector3& operator-=(const Vector3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  friend constexpr Vector3 operator*(double s, const Vector3& v) { return v * s; }
  friend constexpr bool operator==(const Vector3&, const Vector3&) = default;
};

using Force3 = Vector3<ForceTag>;
using Torque3 = Vector3<TorqueTag>;
using Position3 = Vector3<LengthTag>;

template <class Tag>
constexpr double dot(const Vector3<Tag>& a, const Vector3<Tag>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Dot product of a unit direction (stored as a position-tagged vector) with
/// any quantity.
template <class Tag>
constexpr double project(const Position3& axis, const Vector3<Tag>& v) {
  return axis.x * v.x + axis.y * v.y + axis.z * v.z;
}

/// Moment of a force about a point: lever × force.
constexpr Torque3 moment(const Position3& lever, const Force3& f) {
  return {lever.y * f.z - lever.z * f.y, lever.z * f.x - lever.x * f.z, lever.x * f.y - lever.y * f.x};
}

struct Force2 {
  double fx = 0.0;
  double fy = 0.0;

  double norm() const { return std::hypot(fx, fy); }
  friend constexpr bool operator==(const Force2&, const Force2&) = default;
};

struct Wrench {
  Force3 force;
  Torque3 torque;

  bool finite() const { return force.finite() && torque.finite(); }
  friend constexpr bool operator==(const Wrench&, const Wrench&) = default;
};

/// 3×3 rotation, row-major. Construction does not validate; use
/// Rotation3::from_row_major or is_valid() where a proper rotation is required.
class Rotation3 {
 public:
  constexpr Rotation3() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  constexpr explicit Rotation3(const std::array<double, 9>& row_major) : m_(row_major) {}

  static Rotation3 identity() { return Rotation3{}; }
  static Rotation3 about_x(double angle);
  static Rotation3 about_y(double angle);
  static Rotation3 about_z(double angle);

  /// Validated construction; throws ConfigError if not a proper rotation.
  static Rotation3 from_row_major(const std::array<double, 9>& row_major, double tol = 1e-9);

  constexpr double operator()(int r, int c) const { return m_[static_cast<std::size_t>(r * 3 + c)]; }
  constexpr const std::array<double, 9>& row_major() const { return m_; }

  template <class Tag>
  constexpr Vector3<Tag> operator*(const Vector3<Tag>& v) const {
    return {m_[0] * v.x + m_[1] * v.y + m_[2] * v.z, m_[3] * v.x + m_[4] * v.y + m_[5] * v.z,
            m_[6] * v.x + m_[7] * v.y + m_[8] * v.z};
  }
  Rotation3 operator*(const Rotation3& o) const;
  Rotation3 transpose() const;
  double determinant() const;

  /// RᵀR = I and det = +1, both within tol.
  bool is_valid(double tol = 1e-9) const;

  friend constexpr bool operator==(const Rotation3&, const Rotation3&) = default;

 private:
  std::array<double, 9> m_;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle to [−π, π).
double wrap_angle(double radians);

/// Shortest signed angular distance from `from` to `to`, in (−π, π]. An exact
/// half-turn resolves to +π.
double shortest_angular_distance(double from, double to);

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace hapcompass
