#pragma once

/**
 * \file refsolver.hpp
 * \brief Grid-based reference solver: bilinear quadrilaterals on a structured
 * mesh, 2x2 Gauss quadrature, staggered minimization over displacement and
 * director angle under incremental displacement control.
 *
 * Unknowns are nodal u (two components) and nodal phi. At Gauss points phi is
 * interpolated and d = (cos phi, sin phi), so |d| = 1 holds pointwise.
 * Dirichlet data: u = 0 and phi = phi0 on X = 0, u = (du(t), 0) on X = L.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cosserat/errors.hpp"
#include "cosserat/field_grid.hpp"
#include "cosserat/material.hpp"
#include "cosserat/network.hpp"
#include "cosserat/optim.hpp"

namespace cosserat {

class StructuredMesh
{
public:
  StructuredMesh(std::size_t nx, std::size_t ny, double L = 1.0, double W = 0.2) : nx_(nx), ny_(ny), L_(L), W_(W)
  {
    if (nx == 0 || ny == 0)
      throw ConfigError("mesh: element counts must be positive");
    if (!(L > 0.0) || !(W > 0.0))
      throw ConfigError("mesh: dimensions must be positive");
    hx_ = L / static_cast<double>(nx);
    hy_ = W / static_cast<double>(ny);
    nodes_.reserve(node_count());
    for (std::size_t j = 0; j <= ny; ++j)
      for (std::size_t i = 0; i <= nx; ++i)
        nodes_.push_back({i == nx ? L : static_cast<double>(i) * hx_, j == ny ? W : static_cast<double>(j) * hy_});

    // reference quantities shared by every (identical, axis-aligned) element
    const double g = 1.0 / std::sqrt(3.0);
    const double xi[2] = {-g, g};
    int q = 0;
    for (double eta : xi)
      for (double x : xi) {
        const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
        for (int a = 0; a < 4; ++a) {
          shape_[q][a] = 0.25 * (1 + sx[a] * x) * (1 + sy[a] * eta);
          dshape_[q][a] = {0.25 * sx[a] * (1 + sy[a] * eta) * 2.0 / hx_, 0.25 * sy[a] * (1 + sx[a] * x) * 2.0 / hy_};
        }
        gauss_offset_[q] = {0.5 * hx_ * (1 + x), 0.5 * hy_ * (1 + eta)};
        ++q;
      }
    weight_ = 0.25 * hx_ * hy_;
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double length() const { return L_; }
  double width() const { return W_; }
  std::size_t node_count() const { return (nx_ + 1) * (ny_ + 1); }
  std::size_t element_count() const { return nx_ * ny_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  std::size_t node(std::size_t i, std::size_t j) const { return j * (nx_ + 1) + i; }

  /// Counter-clockwise node ids of element e.
  std::array<std::size_t, 4> element(std::size_t e) const
  {
    const std::size_t i = e % nx_, j = e / nx_;
    const std::size_t n0 = node(i, j);
    return {n0, n0 + 1, n0 + nx_ + 2, n0 + nx_ + 1};
  }

  double shape(int q, int a) const { return shape_[q][a]; }
  const Vec2& shape_gradient(int q, int a) const { return dshape_[q][a]; }
  double gauss_weight() const { return weight_; }
  Vec2 gauss_point(std::size_t e, int q) const { return nodes_[element(e)[0]] + gauss_offset_[q]; }

  bool on_left(std::size_t n) const { return n % (nx_ + 1) == 0; }
  bool on_right(std::size_t n) const { return n % (nx_ + 1) == nx_; }

  /// Element containing X (lowest index on shared edges) and local coordinates in [-1, 1]^2.
  std::pair<std::size_t, Vec2> locate(const Vec2& X) const
  {
    const auto clampi = [](double v, std::size_t n) {
      const auto k = static_cast<long>(std::floor(v));
      return static_cast<std::size_t>(std::clamp<long>(k, 0, static_cast<long>(n) - 1));
    };
    const std::size_t i = clampi(X.x / hx_, nx_), j = clampi(X.y / hy_, ny_);
    const Vec2 o = nodes_[node(i, j)];
    return {j * nx_ + i, {2.0 * (X.x - o.x) / hx_ - 1.0, 2.0 * (X.y - o.y) / hy_ - 1.0}};
  }

  double hx() const { return hx_; }
  double hy() const { return hy_; }

private:
  std::size_t nx_, ny_;
  double L_, W_, hx_ = 0, hy_ = 0, weight_ = 0;
  std::vector<Vec2> nodes_;
  double shape_[4][4]{};
  Vec2 dshape_[4][4]{};
  Vec2 gauss_offset_[4]{};
};

struct LoadProgram
{
  std::size_t n_increments = 300;
  double delta_u_max = 0.1;

  double delta_u(std::size_t t) const
  {
    return delta_u_max * static_cast<double>(t) / static_cast<double>(n_increments);
  }
};

struct DiscreteState
{
  std::vector<Vec2> u;
  std::vector<double> phi;

  friend bool operator==(const DiscreteState&, const DiscreteState&) = default;
};

/// Reference configuration with phi = phi0 everywhere.
inline DiscreteState initial_state(const StructuredMesh& mesh, double phi0)
{
  return {std::vector<Vec2>(mesh.node_count()), std::vector<double>(mesh.node_count(), phi0)};
}

/// Fields interpolated at one Gauss point.
struct GaussFields
{
  Vec2 u{};
  Mat2 gradu{};
  double phi = 0.0;
  Vec2 gradphi{};
};

inline GaussFields interpolate(const StructuredMesh& mesh, const DiscreteState& s, std::size_t e, int q)
{
  const auto en = mesh.element(e);
  GaussFields f;
  for (int a = 0; a < 4; ++a) {
    const double N = mesh.shape(q, a);
    const Vec2& dN = mesh.shape_gradient(q, a);
    const Vec2& ua = s.u[en[a]];
    f.u += N * ua;
    f.gradu += outer(ua, dN);
    f.phi += N * s.phi[en[a]];
    f.gradphi += s.phi[en[a]] * dN;
  }
  return f;
}

/**
 * Discrete total energy. When gu / gphi are non-empty they receive the full
 * nodal gradient (constrained rows included; callers mask them).
 */
inline double discrete_energy(const DiscreteState& s, const StructuredMesh& mesh, const MaterialParams& p,
                              std::span<Vec2> gu = {}, std::span<double> gphi = {})
{
  const bool wantU = !gu.empty(), wantPhi = !gphi.empty();
  if (wantU)
    std::fill(gu.begin(), gu.end(), Vec2{});
  if (wantPhi)
    std::fill(gphi.begin(), gphi.end(), 0.0);
  const double w = mesh.gauss_weight();
  double E = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto en = mesh.element(e);
    for (int q = 0; q < 4; ++q) {
      const GaussFields f = interpolate(mesh, s, e, q);
      AngleSensitivity sens;
      try {
        sens = angle_sensitivity(f.gradu, f.phi, f.gradphi, p);
      } catch (const NonPositiveJacobian& ex) {
        throw NonPositiveJacobian(ex.jacobian(), "element " + std::to_string(e));
      }
      E += w * sens.W;
      for (int a = 0; a < 4; ++a) {
        const Vec2& dN = mesh.shape_gradient(q, a);
        if (wantU)
          gu[en[a]] += w * (sens.dW_dgradu * dN);
        if (wantPhi)
          gphi[en[a]] += w * (sens.dW_dphi * mesh.shape(q, a) + dot(sens.dW_dgradphi, dN));
      }
    }
  }
  return E;
}

/// Sets the Dirichlet rows for load level du.
inline void apply_dirichlet(DiscreteState& s, const StructuredMesh& mesh, double phi0, double du)
{
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (mesh.on_left(n)) {
      s.u[n] = {0.0, 0.0};
      s.phi[n] = phi0;
    } else if (mesh.on_right(n)) {
      s.u[n] = {du, 0.0};
    }
  }
}

enum class StageMinimizer { newton, lbfgs };

struct StaggeredOptions
{
  StageMinimizer stage_minimizer = StageMinimizer::newton;
  /// Alternations stop once |delta(u, phi)| <= tolerance |(u, phi)| over free dofs.
  double tolerance = 1e-6;
  std::size_t max_alternations = 50;
  /// Max-norm gradient tolerance of each stage minimizer, relative to (1 + |E|).
  double stage_gradient_tolerance = 1e-10;
  /// Iteration cap per stage; 0 selects 100 for Newton and 20000 for L-BFGS.
  std::size_t stage_max_iterations = 0;
  std::size_t lbfgs_memory = 20; ///< lbfgs stages only
  /// Increments whose converged state is kept (the final one always is).
  std::vector<std::size_t> record_increments;
  /// Called after every alternation with (increment, alternation, energy, relative update).
  std::function<void(std::size_t, std::size_t, double, double)> on_alternation;
};

struct IncrementRecord
{
  std::size_t increment = 0;
  double load = 0.0;
  double energy = 0.0;
  std::size_t alternations = 0;
};

struct StaggeredResult
{
  std::vector<std::pair<std::size_t, DiscreteState>> snapshots;
  std::vector<IncrementRecord> history;
  /// Energy after every stage, in order (u stage, phi stage, u stage, ...).
  std::vector<double> stage_energies;
  DiscreteState final_state;
  double final_energy = 0.0;
};

namespace detail {

struct DofMap
{
  std::vector<std::size_t> u_nodes;   ///< nodes with free displacement
  std::vector<std::size_t> phi_nodes; ///< nodes with free angle
};

inline DofMap free_dofs(const StructuredMesh& mesh)
{
  DofMap m;
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (!mesh.on_left(n) && !mesh.on_right(n))
      m.u_nodes.push_back(n);
    if (!mesh.on_left(n))
      m.phi_nodes.push_back(n);
  }
  return m;
}

inline double free_norm(const DiscreteState& s, const DofMap& m)
{
  double a = 0.0;
  for (std::size_t n : m.u_nodes)
    a += dot(s.u[n], s.u[n]);
  for (std::size_t n : m.phi_nodes)
    a += s.phi[n] * s.phi[n];
  return std::sqrt(a);
}

inline double free_distance(const DiscreteState& a, const DiscreteState& b, const DofMap& m)
{
  double d = 0.0;
  for (std::size_t n : m.u_nodes) {
    const Vec2 v = a.u[n] - b.u[n];
    d += dot(v, v);
  }
  for (std::size_t n : m.phi_nodes)
    d += (a.phi[n] - b.phi[n]) * (a.phi[n] - b.phi[n]);
  return std::sqrt(d);
}

inline std::vector<long> free_index(const std::vector<std::size_t>& nodes, std::size_t n_nodes)
{
  std::vector<long> idx(n_nodes, -1);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    idx[nodes[k]] = static_cast<long>(k);
  return idx;
}

/// Energy, free-dof gradient and (optionally) free-dof Hessian of the u stage.
inline double u_stage(const DiscreteState& s, const StructuredMesh& mesh, const MaterialParams& p,
                      const DofMap& m, const std::vector<long>& idx, std::span<double> g, SparseHessian* H,
                      std::vector<Vec2>& gu)
{
  const double E = discrete_energy(s, mesh, p, gu, {});
  for (std::size_t k = 0; k < m.u_nodes.size(); ++k) {
    g[2 * k] = gu[m.u_nodes[k]].x;
    g[2 * k + 1] = gu[m.u_nodes[k]].y;
  }
  if (!H)
    return E;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.element_count() * 64);
  const double w = mesh.gauss_weight();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto en = mesh.element(e);
    double Ke[8][8]{};
    for (int q = 0; q < 4; ++q) {
      const GaussFields f = interpolate(mesh, s, e, q);
      const ElasticHessian C = elastic_hessian(Mat2::identity() + f.gradu, director_from_angle(f.phi), p);
      for (int a = 0; a < 4; ++a) {
        const Vec2& A = mesh.shape_gradient(q, a);
        for (int b = 0; b < 4; ++b) {
          const Vec2& B = mesh.shape_gradient(q, b);
          for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) {
              double v = 0.0;
              for (int J = 0; J < 2; ++J)
                for (int L = 0; L < 2; ++L)
                  v += C[2 * i + J][2 * k + L] * (J == 0 ? A.x : A.y) * (L == 0 ? B.x : B.y);
              Ke[2 * a + i][2 * b + k] += w * v;
            }
        }
      }
    }
    for (int a = 0; a < 4; ++a) {
      const long ra = idx[en[a]];
      if (ra < 0)
        continue;
      for (int b = 0; b < 4; ++b) {
        const long rb = idx[en[b]];
        if (rb < 0)
          continue;
        for (int i = 0; i < 2; ++i)
          for (int k = 0; k < 2; ++k)
            trip.emplace_back(2 * ra + i, 2 * rb + k, Ke[2 * a + i][2 * b + k]);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(2 * m.u_nodes.size());
  H->resize(n, n);
  H->setFromTriplets(trip.begin(), trip.end());
  return E;
}

/// Energy, free-dof gradient and (optionally) free-dof Hessian of the phi stage.
inline double phi_stage(const DiscreteState& s, const StructuredMesh& mesh, const MaterialParams& p,
                        const DofMap& m, const std::vector<long>& idx, std::span<double> g, SparseHessian* H,
                        std::vector<double>& gp)
{
  const double E = discrete_energy(s, mesh, p, {}, gp);
  for (std::size_t k = 0; k < m.phi_nodes.size(); ++k)
    g[k] = gp[m.phi_nodes[k]];
  if (!H)
    return E;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.element_count() * 16);
  const double w = mesh.gauss_weight();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto en = mesh.element(e);
    double Ke[4][4]{};
    for (int q = 0; q < 4; ++q) {
      const GaussFields f = interpolate(mesh, s, e, q);
      const AngleCurvature c = angle_curvature(f.gradu, f.phi, p);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          Ke[a][b] += w * (c.d2W_dphi2 * mesh.shape(q, a) * mesh.shape(q, b) +
                           c.d2W_dgradphi2 * dot(mesh.shape_gradient(q, a), mesh.shape_gradient(q, b)));
    }
    for (int a = 0; a < 4; ++a) {
      const long ra = idx[en[a]];
      if (ra < 0)
        continue;
      for (int b = 0; b < 4; ++b) {
        const long rb = idx[en[b]];
        if (rb >= 0)
          trip.emplace_back(ra, rb, Ke[a][b]);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(m.phi_nodes.size());
  H->resize(n, n);
  H->setFromTriplets(trip.begin(), trip.end());
  return E;
}

template <class Stage>
double minimize_stage(std::vector<double>& x, Stage&& stage, const StaggeredOptions& opt, double scale)
{
  if (opt.stage_minimizer == StageMinimizer::newton) {
    NewtonOptions no;
    no.max_iterations = opt.stage_max_iterations ? opt.stage_max_iterations : 100;
    no.gradient_tolerance = opt.stage_gradient_tolerance * scale;
    return newton_minimize(stage, std::span<double>(x), no).f;
  }
  LbfgsOptions lo;
  lo.memory = opt.lbfgs_memory;
  lo.max_iterations = opt.stage_max_iterations ? opt.stage_max_iterations : 20000;
  lo.gradient_tolerance = opt.stage_gradient_tolerance * scale;
  auto first_order = [&](std::span<const double> z, std::span<double> g) { return stage(z, g, nullptr); };
  return lbfgs_minimize(first_order, std::span<double>(x), lo).f;
}

/// Minimizes over the free u dofs (phi frozen).
inline double minimize_u(DiscreteState& s, const StructuredMesh& mesh, const MaterialParams& p, const DofMap& m,
                         const StaggeredOptions& opt, double scale)
{
  const std::vector<long> idx = free_index(m.u_nodes, mesh.node_count());
  std::vector<double> x(2 * m.u_nodes.size());
  for (std::size_t k = 0; k < m.u_nodes.size(); ++k) {
    x[2 * k] = s.u[m.u_nodes[k]].x;
    x[2 * k + 1] = s.u[m.u_nodes[k]].y;
  }
  DiscreteState work = s;
  std::vector<Vec2> gu(mesh.node_count());
  auto stage = [&](std::span<const double> z, std::span<double> g, SparseHessian* H) {
    for (std::size_t k = 0; k < m.u_nodes.size(); ++k)
      work.u[m.u_nodes[k]] = {z[2 * k], z[2 * k + 1]};
    return u_stage(work, mesh, p, m, idx, g, H, gu);
  };
  const double E = minimize_stage(x, stage, opt, scale);
  for (std::size_t k = 0; k < m.u_nodes.size(); ++k)
    s.u[m.u_nodes[k]] = {x[2 * k], x[2 * k + 1]};
  return E;
}

/// Minimizes over the free phi dofs (u frozen).
inline double minimize_phi(DiscreteState& s, const StructuredMesh& mesh, const MaterialParams& p, const DofMap& m,
                           const StaggeredOptions& opt, double scale)
{
  const std::vector<long> idx = free_index(m.phi_nodes, mesh.node_count());
  std::vector<double> x(m.phi_nodes.size());
  for (std::size_t k = 0; k < m.phi_nodes.size(); ++k)
    x[k] = s.phi[m.phi_nodes[k]];
  DiscreteState work = s;
  std::vector<double> gp(mesh.node_count());
  auto stage = [&](std::span<const double> z, std::span<double> g, SparseHessian* H) {
    for (std::size_t k = 0; k < m.phi_nodes.size(); ++k)
      work.phi[m.phi_nodes[k]] = z[k];
    return phi_stage(work, mesh, p, m, idx, g, H, gp);
  };
  const double E = minimize_stage(x, stage, opt, scale);
  for (std::size_t k = 0; k < m.phi_nodes.size(); ++k)
    s.phi[m.phi_nodes[k]] = x[k];
  return E;
}

} // namespace detail

/**
 * Incremental staggered minimization. Each increment raises the right-edge
 * displacement, shifts the interior displacement by the same linear ramp as
 * a predictor, then alternates u and phi minimizations until the combined
 * update is below tolerance.
 */
inline StaggeredResult staggered_solve(const CaseSetup& c, const LoadProgram& program, const StructuredMesh& mesh,
                                       const MaterialParams& p, const StaggeredOptions& opt = {})
{
  c.validate();
  p.validate();
  if (program.n_increments == 0)
    throw ConfigError("load program needs at least one increment");
  const detail::DofMap dofs = detail::free_dofs(mesh);
  DiscreteState s = initial_state(mesh, c.phi0);
  StaggeredResult res;
  double prev_du = 0.0;

  for (std::size_t t = 1; t <= program.n_increments; ++t) {
    const double du = program.delta_u(t);
    for (std::size_t n : dofs.u_nodes)
      s.u[n].x += (du - prev_du) * mesh.nodes()[n].x / mesh.length();
    apply_dirichlet(s, mesh, c.phi0, du);
    prev_du = du;

    double E = 0.0;
    try {
      E = discrete_energy(s, mesh, p);
    } catch (const NonPositiveJacobian& e) {
      throw StageDiverged(t, "predictor", e.what());
    }
    std::size_t alt = 0;
    for (;;) {
      if (alt == opt.max_alternations)
        throw StageDiverged(t, "alternation", "no convergence within " + std::to_string(opt.max_alternations) +
                                                " alternations");
      ++alt;
      const DiscreteState before = s;
      const double scale = 1.0 + std::abs(E);
      try {
        E = detail::minimize_u(s, mesh, p, dofs, opt, scale);
      } catch (const Error& e) {
        throw StageDiverged(t, "displacement", e.what());
      }
      res.stage_energies.push_back(E);
      try {
        E = detail::minimize_phi(s, mesh, p, dofs, opt, scale);
      } catch (const Error& e) {
        throw StageDiverged(t, "director", e.what());
      }
      res.stage_energies.push_back(E);
      if (!std::isfinite(E))
        throw StageDiverged(t, "director", "energy is not finite");
      const double update = detail::free_distance(s, before, dofs) / std::max(detail::free_norm(s, dofs), 1e-300);
      if (opt.on_alternation)
        opt.on_alternation(t, alt, E, update);
      if (update <= opt.tolerance)
        break;
    }
    res.history.push_back({t, du, E, alt});
    if (std::find(opt.record_increments.begin(), opt.record_increments.end(), t) != opt.record_increments.end() ||
        t == program.n_increments)
      res.snapshots.emplace_back(t, s);
  }
  res.final_energy = res.history.back().energy;
  res.final_state = std::move(s);
  return res;
}

/// Max-norm of the discrete energy gradient over free dofs.
inline double free_gradient_norm(const DiscreteState& s, const StructuredMesh& mesh, const MaterialParams& p)
{
  std::vector<Vec2> gu(mesh.node_count());
  std::vector<double> gp(mesh.node_count());
  discrete_energy(s, mesh, p, gu, gp);
  double m = 0.0;
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (!mesh.on_left(n) && !mesh.on_right(n))
      m = std::max({m, std::abs(gu[n].x), std::abs(gu[n].y)});
    if (!mesh.on_left(n))
      m = std::max(m, std::abs(gp[n]));
  }
  return m;
}

/// Kinematic samples at every Gauss point (element-major).
inline std::vector<FieldSample> gauss_point_samples(const DiscreteState& s, const StructuredMesh& mesh)
{
  std::vector<FieldSample> out;
  out.reserve(4 * mesh.element_count());
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < 4; ++q) {
      const GaussFields f = interpolate(mesh, s, e, q);
      const KinematicState st = angle_state(f.gradu, f.phi, f.gradphi);
      out.push_back({mesh.gauss_point(e, q), f.u, f.phi, st.F, st.d, st.gradd});
    }
  return out;
}

/// Bilinear interpolation of the discrete solution onto a lattice. Gradients
/// are taken from the containing element (lowest index on shared edges).
inline FieldGrid sample_discrete(const DiscreteState& s, const StructuredMesh& mesh, const GridSpec& spec)
{
  FieldGrid grid;
  grid.nx = spec.nx;
  grid.ny = spec.ny;
  grid.samples.reserve(spec.nx * spec.ny);
  for (std::size_t j = 0; j < spec.ny; ++j)
    for (std::size_t i = 0; i < spec.nx; ++i) {
      const Vec2 X = spec.point(i, j);
      const auto [e, xi] = mesh.locate(X);
      const auto en = mesh.element(e);
      const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
      Vec2 u{};
      Mat2 gradu{};
      double phi = 0.0;
      Vec2 gradphi{};
      for (int a = 0; a < 4; ++a) {
        const double N = 0.25 * (1 + sx[a] * xi.x) * (1 + sy[a] * xi.y);
        const Vec2 dN{0.25 * sx[a] * (1 + sy[a] * xi.y) * 2.0 / mesh.hx(),
                      0.25 * sy[a] * (1 + sx[a] * xi.x) * 2.0 / mesh.hy()};
        u += N * s.u[en[a]];
        gradu += outer(s.u[en[a]], dN);
        phi += N * s.phi[en[a]];
        gradphi += s.phi[en[a]] * dN;
      }
      const KinematicState st = angle_state(gradu, phi, gradphi);
      grid.samples.push_back({X, u, phi, st.F, st.d, st.gradd});
    }
  return grid;
}

struct MeshStudyRow
{
  std::size_t ny = 0;
  std::size_t nx = 0;
  double min_phi = 0.0;
  double mean_phi = 0.0;
  double max_phi = 0.0;
  double energy = 0.0;
  DiscreteState state;
};

struct AngleStats
{
  double min = 0.0, mean = 0.0, max = 0.0;
};

inline AngleStats nodal_angle_stats(const std::vector<double>& phi)
{
  AngleStats st{phi.front(), 0.0, phi.front()};
  for (double v : phi) {
    st.min = std::min(st.min, v);
    st.max = std::max(st.max, v);
    st.mean += v;
  }
  st.mean /= static_cast<double>(phi.size());
  return st;
}

/// Runs the full load program on nx = 5 ny meshes and tabulates final nodal phi statistics.
inline std::vector<MeshStudyRow> mesh_independence_study(const CaseSetup& c, const MaterialParams& p,
                                                         const std::vector<std::size_t>& ny_list = {5, 10, 15, 20},
                                                         const LoadProgram& program = {},
                                                         const StaggeredOptions& opt = {},
                                                         const std::function<void(const MeshStudyRow&)>& on_row = {})
{
  std::vector<MeshStudyRow> rows;
  for (std::size_t ny : ny_list) {
    const StructuredMesh mesh(5 * ny, ny, c.L, c.W);
    const StaggeredResult r = staggered_solve(c, program, mesh, p, opt);
    const AngleStats st = nodal_angle_stats(r.final_state.phi);
    rows.push_back({ny, 5 * ny, st.min, st.mean, st.max, r.final_energy, r.final_state});
    if (on_row)
      on_row(rows.back());
  }
  return rows;
}

inline void write_mesh_study_csv(const std::vector<MeshStudyRow>& rows, const std::string& path)
{
  auto os = detail::open_for_write(path);
  os << "ny,nx,min_phi,mean_phi,max_phi,energy\n";
  for (const auto& r : rows)
    os << r.ny << ',' << r.nx << ',' << detail::fmt17(r.min_phi) << ',' << detail::fmt17(r.mean_phi) << ','
       << detail::fmt17(r.max_phi) << ',' << detail::fmt17(r.energy) << '\n';
  if (!os)
    throw IoError("write failed for '" + path + "'");
}

} // namespace cosserat
