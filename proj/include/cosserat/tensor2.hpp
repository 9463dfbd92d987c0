#pragma once

#include <cmath>
#include <ostream>

#include "cosserat/errors.hpp"

namespace cosserat {

/// In-plane vector. Holds directors, displacements, reference points and the
/// probe directions of the stability checks.
struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : y; }
  constexpr double& operator[](int i) { return i == 0 ? x : y; }

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

/// Row-major 2x2 tensor; (i, A) indexing matches F_iA = dx_i/dX_A.
struct Mat2
{
  double a11 = 0.0, a12 = 0.0;
  double a21 = 0.0, a22 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

  constexpr double operator()(int i, int j) const
  {
    return i == 0 ? (j == 0 ? a11 : a12) : (j == 0 ? a21 : a22);
  }
  constexpr double& operator()(int i, int j)
  {
    return i == 0 ? (j == 0 ? a11 : a12) : (j == 0 ? a21 : a22);
  }

  constexpr Vec2 col(int j) const { return j == 0 ? Vec2{a11, a21} : Vec2{a12, a22}; }
  constexpr Vec2 row(int i) const { return i == 0 ? Vec2{a11, a12} : Vec2{a21, a22}; }

  constexpr Mat2& operator+=(const Mat2& o)
  {
    a11 += o.a11; a12 += o.a12; a21 += o.a21; a22 += o.a22;
    return *this;
  }
  constexpr Mat2& operator-=(const Mat2& o)
  {
    a11 -= o.a11; a12 -= o.a12; a21 -= o.a21; a22 -= o.a22;
    return *this;
  }
  constexpr Mat2& operator*=(double s)
  {
    a11 *= s; a12 *= s; a21 *= s; a22 *= s;
    return *this;
  }

  friend constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
  friend constexpr Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
  friend constexpr Mat2 operator-(const Mat2& a) { return {-a.a11, -a.a12, -a.a21, -a.a22}; }
  friend constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }
  friend constexpr Mat2 operator*(Mat2 a, double s) { return a *= s; }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

  friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b)
  {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
  }
  friend constexpr Vec2 operator*(const Mat2& a, const Vec2& v)
  {
    return {a.a11 * v.x + a.a12 * v.y, a.a21 * v.x + a.a22 * v.y};
  }
};

/// |det| at or below this is treated as singular. Every tensor in scope is O(1).
inline constexpr double singular_tolerance = 1e-12;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// Quarter-turn rotation. The planar stand-in for q x d: for a unit in-plane
/// director the only admissible rotational perturbation is along perp(d).
constexpr Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

constexpr double det(const Mat2& m) { return m.a11 * m.a22 - m.a12 * m.a21; }
constexpr double trace(const Mat2& m) { return m.a11 + m.a22; }
constexpr Mat2 transpose(const Mat2& m) { return {m.a11, m.a21, m.a12, m.a22}; }
constexpr Mat2 outer(const Vec2& a, const Vec2& b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }
constexpr double frobenius_inner(const Mat2& a, const Mat2& b)
{
  return a.a11 * b.a11 + a.a12 * b.a12 + a.a21 * b.a21 + a.a22 * b.a22;
}
inline double frobenius_norm(const Mat2& m) { return std::sqrt(frobenius_inner(m, m)); }

constexpr Mat2 sym(const Mat2& m) { return 0.5 * (m + transpose(m)); }
constexpr Mat2 skew(const Mat2& m) { return 0.5 * (m - transpose(m)); }

inline Mat2 inverse(const Mat2& m)
{
  const double J = det(m);
  if (!(std::abs(J) > singular_tolerance))
    throw SingularMatrix(J);
  const double s = 1.0 / J;
  return {s * m.a22, -s * m.a12, -s * m.a21, s * m.a11};
}

inline Mat2 rotation(double theta)
{
  const double c = std::cos(theta), s = std::sin(theta);
  return {c, -s, s, c};
}

inline std::ostream& operator<<(std::ostream& os, const Vec2& v)
{
  return os << '(' << v.x << ", " << v.y << ')';
}

inline std::ostream& operator<<(std::ostream& os, const Mat2& m)
{
  return os << "[[" << m.a11 << ", " << m.a12 << "], [" << m.a21 << ", " << m.a22 << "]]";
}

} // namespace cosserat
