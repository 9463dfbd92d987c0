#pragma once

/**
 * \file material.hpp
 * \brief Nematic-elastomer energy for a planar Cosserat medium with one unit director.
 *
 * The stored energy per unit reference area is
 *
 *   W(F, d, grad d) = mu/2 (tr(L0 F^T L^-1 F) - 2 - 2 ln J) + frank |grad d|^2
 *
 * with L = I + (r-1) d (x) d, L0 = I + (r-1) D (x) D and J = det F. `frank`
 * is the grouped Frank coefficient (alpha gamma^2 / 2), so the couple stress is
 * M = 2 frank grad d. The "2" subtracted from the trace is tr I in two
 * dimensions; it makes W vanish in the reference state.
 *
 * Everything here is a pure function of its arguments.
 */

#include <array>
#include <cmath>
#include <string>

#include "cosserat/errors.hpp"
#include "cosserat/tensor2.hpp"

namespace cosserat {

/// Trace of the planar identity; the constant offset in W.
inline constexpr double planar_identity_trace = 2.0;

struct MaterialParams
{
  double mu = 1.0;     ///< shear modulus (normalized)
  double r = 2.0;      ///< shape anisotropy l_par / l_perp
  double frank = 5e-4; ///< alpha gamma^2 / 2
  Vec2 D{1.0, 0.0};    ///< reference director

  static MaterialParams with_reference_angle(double phi0, double mu = 1.0, double r = 2.0, double frank = 5e-4)
  {
    return {mu, r, frank, {std::cos(phi0), std::sin(phi0)}};
  }

  void validate() const
  {
    if (!(mu > 0.0))
      throw ConfigError("material: mu must be positive");
    if (!(r > 0.0))
      throw ConfigError("material: r must be positive");
    if (!(frank >= 0.0))
      throw ConfigError("material: frank must be non-negative");
    if (std::abs(norm(D) - 1.0) > 1e-12)
      throw ConfigError("material: reference director must be a unit vector");
  }
};

/// Pointwise argument list of W. gradd(i, A) = d d_i / d X_A.
struct KinematicState
{
  Mat2 F = Mat2::identity();
  Vec2 d{1.0, 0.0};
  Mat2 gradd{};
};

struct StressSet
{
  Mat2 P{}; ///< first Piola stress dW/dF
  Vec2 N{}; ///< internal couple dW/dd
  Mat2 M{}; ///< couple stress dW/d(grad d)
};

inline Mat2 l_tensor(const Vec2& d, double r) { return Mat2::identity() + (r - 1.0) * outer(d, d); }
inline Mat2 l0_tensor(const Vec2& D, double r) { return l_tensor(D, r); }

/// Closed-form inverse of l_tensor for a unit director.
inline Mat2 l_tensor_inverse(const Vec2& d, double r)
{
  return Mat2::identity() + (1.0 / r - 1.0) * outer(d, d);
}

namespace detail {
inline double checked_jacobian(const Mat2& F)
{
  const double J = det(F);
  if (!(J > 0.0))
    throw NonPositiveJacobian(J);
  return J;
}
} // namespace detail

inline double energy_density(const KinematicState& st, const MaterialParams& p)
{
  const double J = detail::checked_jacobian(st.F);
  const Mat2 L0 = l0_tensor(p.D, p.r);
  const Mat2 Linv = l_tensor_inverse(st.d, p.r);
  const double tr = trace(L0 * transpose(st.F) * Linv * st.F);
  return 0.5 * p.mu * (tr - planar_identity_trace - 2.0 * std::log(J)) + p.frank * frobenius_inner(st.gradd, st.gradd);
}

inline StressSet stresses(const KinematicState& st, const MaterialParams& p)
{
  detail::checked_jacobian(st.F);
  const Mat2 L0 = l0_tensor(p.D, p.r);
  const Mat2 Linv = l_tensor_inverse(st.d, p.r);
  const Mat2 FinvT = transpose(inverse(st.F));
  StressSet s;
  s.P = p.mu * (Linv * st.F * L0 - FinvT);
  s.N = p.mu * (1.0 / p.r - 1.0) * ((st.F * L0 * transpose(st.F)) * st.d);
  s.M = 2.0 * p.frank * st.gradd;
  return s;
}

/// Frobenius norm of skew(P F^T + N (x) d + M grad d^T). Zero for any
/// frame-invariant energy.
inline double frame_invariance_residual(const KinematicState& st, const StressSet& s)
{
  const Mat2 A = s.P * transpose(st.F) + outer(s.N, st.d) + s.M * transpose(st.gradd);
  return frobenius_norm(skew(A));
}

inline double frame_invariance_residual(const KinematicState& st, const MaterialParams& p)
{
  return frame_invariance_residual(st, stresses(st, p));
}

/// (s . L^-1 s)(T . L0 T): the anisotropic factor of the deformation block.
inline double anisotropy_factor(const Vec2& s, const Vec2& T, const Vec2& d, const Vec2& D, double r)
{
  return dot(s, l_tensor_inverse(d, r) * s) * dot(T, l0_tensor(D, r) * T);
}

/// The three blocks of the second variation along (s (x) T, b perp(d) (x) T).
struct LegendreHadamardTerms
{
  double deformation = 0.0; ///< d2W/dF2 [s(x)T, s(x)T]
  double coupling = 0.0;    ///< 2 d2W/dF d(grad d) [s(x)T, b perp(d)(x)T]
  double director = 0.0;    ///< d2W/d(grad d)2 [b perp(d)(x)T, b perp(d)(x)T]

  double total() const { return deformation + coupling + director; }
};

/**
 * Second derivatives of W in closed form.
 *
 * Deformation block: mu[(s.L^-1 s)(T.L0 T) + (s.F^-T T)^2]. The second term is
 * the Hessian of -mu ln det F along s (x) T, i.e. mu tr(F^-1 H F^-1 H).
 * Coupling block: zero, W is additively separable in F and grad d.
 * Director block: 2 frank b^2 |perp d|^2 |T|^2.
 */
inline LegendreHadamardTerms lh_terms(const KinematicState& st, const MaterialParams& p, const Vec2& s, double b,
                                      const Vec2& T)
{
  detail::checked_jacobian(st.F);
  const Mat2 FinvT = transpose(inverse(st.F));
  const double c = dot(s, FinvT * T);
  LegendreHadamardTerms t;
  t.deformation = p.mu * (anisotropy_factor(s, T, st.d, p.D, p.r) + c * c);
  t.coupling = 0.0;
  const Vec2 g = b * perp(st.d);
  t.director = 2.0 * p.frank * dot(g, g) * dot(T, T);
  return t;
}

inline double lh_quadratic_form(const KinematicState& st, const MaterialParams& p, const Vec2& s, double b,
                                const Vec2& T)
{
  return lh_terms(st, p, s, b, T).total();
}

/// W(F + a(x)T, d, grad d + b perp(d)(x)T) - W - P:(a(x)T) - M:(b perp(d)(x)T),
/// with W0 and s0 the energy and stresses already evaluated at `st`.
inline double rank_one_residual(const KinematicState& st, const MaterialParams& p, double W0, const StressSet& s0,
                                const Vec2& a, double b, const Vec2& T)
{
  const Mat2 dF = outer(a, T);
  const Mat2 dG = outer(b * perp(st.d), T);
  KinematicState pert = st;
  pert.F += dF;
  pert.gradd += dG;
  const double J = det(pert.F);
  if (!(J > 0.0))
    throw NonPositiveJacobian(J, "rank-one perturbed state");
  return energy_density(pert, p) - W0 - frobenius_inner(s0.P, dF) - frobenius_inner(s0.M, dG);
}

/// Throws NonPositiveJacobian if either the base or the perturbed F is inverted.
inline double rank_one_residual(const KinematicState& st, const MaterialParams& p, const Vec2& a, double b,
                                const Vec2& T)
{
  return rank_one_residual(st, p, energy_density(st, p), stresses(st, p), a, b, T);
}

// ---------------------------------------------------------------------------
// Angle parameterization d = (cos phi, sin phi), grad d = perp(d) (x) grad phi.
// Both solvers carry phi as the director unknown; these helpers map between
// the (grad u, phi, grad phi) unknowns and the constitutive arguments.

inline Vec2 director_from_angle(double phi) { return {std::cos(phi), std::sin(phi)}; }

inline KinematicState angle_state(const Mat2& gradu, double phi, const Vec2& gradphi)
{
  KinematicState st;
  st.F = Mat2::identity() + gradu;
  st.d = director_from_angle(phi);
  st.gradd = outer(perp(st.d), gradphi);
  return st;
}

/// Partial derivatives of W with respect to the angle-parameterized unknowns.
struct AngleSensitivity
{
  double W = 0.0;
  Mat2 dW_dgradu{}; ///< = P
  double dW_dphi = 0.0;
  Vec2 dW_dgradphi{};
};

inline AngleSensitivity angle_sensitivity(const Mat2& gradu, double phi, const Vec2& gradphi,
                                          const MaterialParams& p)
{
  const KinematicState st = angle_state(gradu, phi, gradphi);
  const StressSet s = stresses(st, p);
  const Vec2 dperp = -st.d; // d perp(d) / d phi
  AngleSensitivity out;
  out.W = energy_density(st, p);
  out.dW_dgradu = s.P;
  out.dW_dphi = dot(s.N, perp(st.d)) + frobenius_inner(s.M, outer(dperp, gradphi));
  out.dW_dgradphi = transpose(s.M) * perp(st.d);
  return out;
}

/// Second derivative of W with respect to F, entry (2i + J, 2k + L) = d2W / dF_iJ dF_kL.
using ElasticHessian = std::array<std::array<double, 4>, 4>;

inline ElasticHessian elastic_hessian(const Mat2& F, const Vec2& d, const MaterialParams& p)
{
  detail::checked_jacobian(F);
  const Mat2 Li = l_tensor_inverse(d, p.r);
  const Mat2 L0 = l0_tensor(p.D, p.r);
  const Mat2 Fi = inverse(F);
  ElasticHessian H{};
  for (int i = 0; i < 2; ++i)
    for (int J = 0; J < 2; ++J)
      for (int k = 0; k < 2; ++k)
        for (int L = 0; L < 2; ++L)
          H[2 * i + J][2 * k + L] = p.mu * (Li(i, k) * L0(J, L) + Fi(J, k) * Fi(L, i));
  return H;
}

/// Second derivatives of the angle-parameterized density at fixed grad u.
/// W has no phi / grad phi cross term and d2W / d(grad phi)^2 = 2 frank I.
struct AngleCurvature
{
  double d2W_dphi2 = 0.0;
  double d2W_dgradphi2 = 0.0;
};

inline AngleCurvature angle_curvature(const Mat2& gradu, double phi, const MaterialParams& p)
{
  const Mat2 F = Mat2::identity() + gradu;
  const Vec2 d = director_from_angle(phi);
  const Vec2 e = perp(d);
  const Mat2 B = F * l0_tensor(p.D, p.r) * transpose(F);
  return {p.mu * (1.0 / p.r - 1.0) * (dot(e, B * e) - dot(d, B * d)), 2.0 * p.frank};
}

} // namespace cosserat
