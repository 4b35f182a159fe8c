#include "hapcompass/core/units.hpp"

#include <string>

#include "hapcompass/core/errors.hpp"

namespace hapcompass {

Rotation3 Rotation3::about_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return Rotation3({1, 0, 0, 0, c, -s, 0, s, c});
}

Rotation3 Rotation3::about_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return Rotation3({c, 0, s, 0, 1, 0, -s, 0, c});
}

Rotation3 Rotation3::about_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return Rotation3({c, -s, 0, s, c, 0, 0, 0, 1});
}

Rotation3 Rotation3::from_row_major(const std::array<double, 9>& row_major, double tol) {
  for (double v : row_major) {
    if (!std::isfinite(v)) throw ConfigError("rotation matrix has a non-finite entry");
  }
  Rotation3 r(row_major);
  if (!r.is_valid(tol)) {
    throw ConfigError("rotation matrix is not orthonormal with det +1 (tolerance " + std::to_string(tol) + ")");
  }
  return r;
}

Rotation3 Rotation3::operator*(const Rotation3& o) const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += (*this)(r, k) * o(k, c);
      out[static_cast<std::size_t>(r * 3 + c)] = acc;
    }
  }
  return Rotation3(out);
}

Rotation3 Rotation3::transpose() const {
  return Rotation3({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]});
}

double Rotation3::determinant() const {
  return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
         m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

bool Rotation3::is_valid(double tol) const {
  const Rotation3 rtr = transpose() * (*this);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double expected = r == c ? 1.0 : 0.0;
      if (std::abs(rtr(r, c) - expected) > tol) return false;
    }
  }
  return std::abs(determinant() - 1.0) <= tol;
}

double wrap_angle(double radians) {
  double w = radians - kTwoPi * std::floor((radians + kPi) / kTwoPi);
  // floor() can land exactly on +π through rounding
  if (w >= kPi) w -= kTwoPi;
  if (w < -kPi) w = -kPi;
  return w;
}

double shortest_angular_distance(double from, double to) {
  const double d = wrap_angle(to - from);
  return d == -kPi ? kPi : d;
}

}  // namespace hapcompass
