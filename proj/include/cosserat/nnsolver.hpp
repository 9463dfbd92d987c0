#pragma once

/**
 * \file nnsolver.hpp
 * \brief Deep-energy training of the deformation and director networks.
 *
 * The loss is the total potential energy sum_q w_q W(F_q, d_q, grad d_q)
 * minus the work of an (optional, zero by default) dead body force. Boundary
 * conditions are built into the ansatz, so there are no penalty terms.
 * Training is full batch and single threaded, hence bitwise reproducible for
 * a fixed seed.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosserat/errors.hpp"
#include "cosserat/field_grid.hpp"
#include "cosserat/graddiff.hpp"
#include "cosserat/material.hpp"
#include "cosserat/network.hpp"
#include "cosserat/optim.hpp"

namespace cosserat {

struct QuadraturePoint
{
  Vec2 X{};
  double weight = 0.0;
};

struct QuadratureSet
{
  std::vector<QuadraturePoint> points;

  double total_weight() const
  {
    double s = 0.0;
    for (const auto& q : points)
      s += q.weight;
    return s;
  }

  void validate(double area) const
  {
    for (const auto& q : points)
      if (!(q.weight > 0.0))
        throw ConfigError("quadrature: weights must be positive");
    if (std::abs(total_weight() - area) > 1e-12)
      throw ConfigError("quadrature: weights do not sum to the domain area");
  }
};

enum class QuadratureKind { gauss_grid, uniform_grid, lobatto_grid };

namespace detail {

/// Composite 3-point Gauss-Lobatto (Simpson) rule on [0, length]: 2n+1 nodes,
/// end points included.
inline std::vector<std::pair<double, double>> composite_lobatto(double length, std::size_t n)
{
  const double h = length / static_cast<double>(n);
  std::vector<std::pair<double, double>> r;
  for (std::size_t k = 0; k <= 2 * n; ++k) {
    const double x = (k == 2 * n) ? length : 0.5 * h * static_cast<double>(k);
    double w = (k % 2 == 1) ? 4.0 * h / 6.0 : 2.0 * h / 6.0;
    if (k == 0 || k == 2 * n)
      w = h / 6.0;
    r.emplace_back(x, w);
  }
  return r;
}

} // namespace detail

/// Per cell: 2x2 Gauss points (gauss_grid), the midpoint (uniform_grid), or
/// 3x3 Gauss-Lobatto points shared with neighbouring cells (lobatto_grid).
/// Only lobatto_grid samples the domain edges.
inline QuadratureSet make_quadrature(const CaseSetup& c, QuadratureKind kind, std::size_t cells_x = 50,
                                     std::size_t cells_y = 10)
{
  if (cells_x == 0 || cells_y == 0)
    throw ConfigError("quadrature: cell counts must be positive");
  const double hx = c.L / static_cast<double>(cells_x);
  const double hy = c.W / static_cast<double>(cells_y);
  QuadratureSet q;
  if (kind == QuadratureKind::uniform_grid) {
    for (std::size_t j = 0; j < cells_y; ++j)
      for (std::size_t i = 0; i < cells_x; ++i)
        q.points.push_back({{(i + 0.5) * hx, (j + 0.5) * hy}, hx * hy});
    return q;
  }
  if (kind == QuadratureKind::lobatto_grid) {
    const auto rx = detail::composite_lobatto(c.L, cells_x), ry = detail::composite_lobatto(c.W, cells_y);
    for (const auto& [y, wy] : ry)
      for (const auto& [x, wx] : rx)
        q.points.push_back({{x, y}, wx * wy});
    return q;
  }
  const double g = 0.5 / std::sqrt(3.0);
  const double offs[2] = {0.5 - g, 0.5 + g};
  for (std::size_t j = 0; j < cells_y; ++j)
    for (std::size_t i = 0; i < cells_x; ++i)
      for (double oy : offs)
        for (double ox : offs)
          q.points.push_back({{(i + ox) * hx, (j + oy) * hy}, 0.25 * hx * hy});
  return q;
}

/**
 * Total potential energy of the two networks and its exact gradient with
 * respect to all parameters. Flat parameter vectors are the deformation net's
 * parameters followed by the director net's.
 */
class EnergyLoss
{
public:
  EnergyLoss(CaseSetup setup, QuadratureSet quad, MaterialParams material, NetworkParams shapeU,
             NetworkParams shapePhi)
    : setup_(setup), quad_(std::move(quad)), mat_(material), shapeU_(std::move(shapeU)), shapePhi_(std::move(shapePhi))
  {
    setup_.validate();
    mat_.validate();
    shapeU_.check_shapes();
    shapePhi_.check_shapes();
    if (shapeU_.input_dim() != 2 || shapeU_.output_dim() != 2)
      throw ShapeMismatch("deformation network must map R^2 -> R^2");
    if (shapePhi_.input_dim() != 2 || shapePhi_.output_dim() != 1)
      throw ShapeMismatch("director network must map R^2 -> R");
    Matrix X(2, static_cast<Eigen::Index>(quad_.points.size()));
    for (std::size_t p = 0; p < quad_.points.size(); ++p) {
      X(0, static_cast<Eigen::Index>(p)) = quad_.points[p].X.x;
      X(1, static_cast<Eigen::Index>(p)) = quad_.points[p].X.y;
    }
    input_block_ = seed_identity_tangents(X);
  }

  /// Dead body force per unit reference area; zero in every computed case.
  Vec2 body_force{};

  std::size_t parameter_count() const { return shapeU_.parameter_count() + shapePhi_.parameter_count(); }
  std::size_t deformation_parameter_count() const { return shapeU_.parameter_count(); }
  const QuadratureSet& quadrature() const { return quad_; }
  const CaseSetup& setup() const { return setup_; }
  const MaterialParams& material() const { return mat_; }

  double value(const NetworkParams& netU, const NetworkParams& netPhi) const
  {
    return evaluate(netU, netPhi, {}, {});
  }

  double value_and_gradient(const NetworkParams& netU, const NetworkParams& netPhi, std::span<double> gU,
                            std::span<double> gPhi) const
  {
    std::fill(gU.begin(), gU.end(), 0.0);
    std::fill(gPhi.begin(), gPhi.end(), 0.0);
    return evaluate(netU, netPhi, gU, gPhi);
  }

  /// Flat-vector interface, usable with loss_gradient and the optimizers.
  double value_and_gradient(std::span<const double> flat, std::span<double> grad) const
  {
    if (flat.size() != parameter_count() || grad.size() != parameter_count())
      throw ShapeMismatch("flat parameter vector has the wrong length");
    const std::size_t nU = shapeU_.parameter_count();
    NetworkParams U = shapeU_, P = shapePhi_;
    U.assign(flat.subspan(0, nU));
    P.assign(flat.subspan(nU));
    return value_and_gradient(U, P, grad.subspan(0, nU), grad.subspan(nU));
  }

  double operator()(std::span<const double> flat, std::span<double> grad) const
  {
    return value_and_gradient(flat, grad);
  }

  std::vector<double> pack(const NetworkParams& netU, const NetworkParams& netPhi) const
  {
    std::vector<double> flat = netU.flatten();
    const std::vector<double> p = netPhi.flatten();
    flat.insert(flat.end(), p.begin(), p.end());
    return flat;
  }

  void unpack(std::span<const double> flat, NetworkParams& netU, NetworkParams& netPhi) const
  {
    netU = shapeU_;
    netPhi = shapePhi_;
    netU.assign(flat.subspan(0, shapeU_.parameter_count()));
    netPhi.assign(flat.subspan(shapeU_.parameter_count()));
  }

private:
  double evaluate(const NetworkParams& netU, const NetworkParams& netPhi, std::span<double> gU,
                  std::span<double> gPhi) const
  {
    const std::size_t N = quad_.points.size();
    const auto n = static_cast<Eigen::Index>(N);
    const bool grad = !gU.empty();
    const TangentPass pu = forward_tangents(netU, input_block_, N);
    const TangentPass pp = forward_tangents(netPhi, input_block_, N);
    const Matrix& ou = pu.output;
    const Matrix& op = pp.output;

    Matrix adjU, adjP;
    if (grad) {
      adjU = Matrix::Zero(2, 3 * n);
      adjP = Matrix::Zero(1, 3 * n);
    }
    double E = 0.0;
    for (std::size_t q = 0; q < N; ++q) {
      const auto c = static_cast<Eigen::Index>(q);
      const Vec2 X = quad_.points[q].X;
      const double w = quad_.points[q].weight;
      const Vec2 rawU{ou(0, c), ou(1, c)};
      const Mat2 rawUgrad{ou(0, n + c), ou(0, 2 * n + c), ou(1, n + c), ou(1, 2 * n + c)};
      const double rawP = op(0, c);
      const Vec2 rawPgrad{op(0, n + c), op(0, 2 * n + c)};
      const DisplacementSample u = displacement_ansatz(setup_, X, rawU, rawUgrad);
      const DirectorSample dir = director_ansatz(setup_, X, rawP, rawPgrad);

      AngleSensitivity s;
      try {
        s = angle_sensitivity(u.gradu, dir.phi, dir.gradphi, mat_);
      } catch (const NonPositiveJacobian& e) {
        throw NonPositiveJacobian(e.jacobian(), "quadrature point " + std::to_string(q));
      }
      E += w * (s.W - dot(body_force, u.u));
      if (!grad)
        continue;

      const double g = X.x * (setup_.L - X.x);
      const double dgx = setup_.L - 2.0 * X.x;
      const Mat2& P = s.dW_dgradu;
      for (int i = 0; i < 2; ++i) {
        adjU(i, c) = w * (P(i, 0) * dgx - g * body_force[i]);
        adjU(i, n + c) = w * g * P(i, 0);
        adjU(i, 2 * n + c) = w * g * P(i, 1);
      }
      adjP(0, c) = w * (X.x * s.dW_dphi + s.dW_dgradphi.x);
      adjP(0, n + c) = w * X.x * s.dW_dgradphi.x;
      adjP(0, 2 * n + c) = w * X.x * s.dW_dgradphi.y;
    }
    if (grad) {
      backward_tangents(netU, pu, adjU, gU);
      backward_tangents(netPhi, pp, adjP, gPhi);
    }
    return E;
  }

  CaseSetup setup_;
  QuadratureSet quad_;
  MaterialParams mat_;
  NetworkParams shapeU_, shapePhi_;
  Matrix input_block_;
};

/// Loss of the zero-weight networks: the homogeneous stretch u = (X/L dL, 0), phi = phi0.
inline double homogeneous_ramp_energy(const CaseSetup& c, const MaterialParams& p)
{
  KinematicState st;
  st.F = Mat2::diag(1.0 + c.delta_L / c.L, 1.0);
  st.d = c.reference_director();
  return c.L * c.W * energy_density(st, p);
}

enum class OptimizerKind { adam, adam_lbfgs };

struct TrainConfig
{
  std::size_t epochs = 3000; ///< Adam epochs
  double learning_rate = 1e-3;
  /// Learning rate at the last Adam epoch of each stage, reached by geometric
  /// decay from `learning_rate`. Zero keeps the rate constant.
  double final_learning_rate = 1e-5;
  OptimizerKind optimizer = OptimizerKind::adam_lbfgs;
  std::size_t lbfgs_iterations = 12000; ///< finisher iterations (adam_lbfgs only)
  std::size_t lbfgs_memory = 50;
  double lbfgs_gradient_tolerance = 1e-12;
  std::uint64_t seed = 0;
  QuadratureKind quadrature = QuadratureKind::lobatto_grid;
  std::size_t cells_x = 50;
  std::size_t cells_y = 10;
  std::size_t log_every = 0; ///< 0 disables progress callbacks
  /// Fractions of the final dL trained in sequence before the final load; each
  /// stage runs `continuation_epochs` Adam epochs.
  std::vector<double> continuation;
  std::size_t continuation_epochs = 1000;
  std::size_t max_backoffs = 30;
  std::function<void(std::size_t, double)> on_log;

  void validate() const
  {
    if (epochs == 0 && !(optimizer == OptimizerKind::adam_lbfgs && lbfgs_iterations > 0))
      throw ConfigError("train: epochs must be positive");
    if (!(learning_rate > 0.0))
      throw ConfigError("train: learning_rate must be positive");
    if (final_learning_rate < 0.0 || !std::isfinite(final_learning_rate))
      throw ConfigError("train: final_learning_rate must be non-negative");
    for (double f : continuation)
      if (!(f >= 0.0 && f <= 1.0))
        throw ConfigError("train: continuation fractions must lie in [0, 1]");
  }
};

struct HistoryEntry
{
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct TrainResult
{
  NetworkParams netU;
  NetworkParams netPhi;
  std::vector<HistoryEntry> history;
  double final_loss = 0.0;
  double gradient_norm = 0.0; ///< Euclidean norm of the loss gradient at the returned parameters
  std::string finisher_status;
};

inline std::uint64_t director_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ull; }

namespace detail {

/// Learning rate for epoch `e` of a stage of `epochs` epochs.
inline double scheduled_rate(const TrainConfig& cfg, std::size_t e, std::size_t epochs)
{
  if (cfg.final_learning_rate <= 0.0 || epochs < 2)
    return cfg.learning_rate;
  const double t = static_cast<double>(e) / static_cast<double>(epochs - 1);
  return cfg.learning_rate * std::pow(cfg.final_learning_rate / cfg.learning_rate, t);
}

/// Runs Adam for `epochs` epochs on `loss`, appending to `history`. A step
/// that lands on an inverted configuration is retried with half the learning
/// rate, at most `max_backoffs` times.
inline void run_adam(const EnergyLoss& loss, std::vector<double>& x, const TrainConfig& cfg, std::size_t epochs,
                     std::vector<HistoryEntry>& history)
{
  const std::size_t n = x.size();
  Adam adam(n, {cfg.learning_rate});
  std::vector<double> g(n), x_prev(n), g_prev(n);
  double f = loss(x, g);
  for (std::size_t e = 0; e < epochs; ++e) {
    const std::size_t epoch = history.size();
    if (!std::isfinite(f))
      throw DivergedTraining(epoch, "loss is not finite");
    history.push_back({epoch, f});
    if (cfg.on_log && cfg.log_every > 0 && epoch % cfg.log_every == 0)
      cfg.on_log(epoch, f);

    x_prev = x;
    g_prev = g;
    Adam saved = adam;
    double lr = scheduled_rate(cfg, e, epochs);
    for (std::size_t attempt = 0;; ++attempt) {
      adam.step(x, g_prev, lr);
      try {
        f = loss(x, g);
        break;
      } catch (const NonPositiveJacobian&) {
        if (attempt + 1 > cfg.max_backoffs)
          throw DivergedTraining(epoch, "step rejected after " + std::to_string(cfg.max_backoffs) +
                                          " learning-rate backoffs");
        x = x_prev;
        adam = saved;
        lr *= 0.5;
      }
    }
  }
  if (!std::isfinite(f))
    throw DivergedTraining(history.size(), "loss is not finite");
}

} // namespace detail

inline TrainResult train(const CaseSetup& setup, const TrainConfig& cfg, const MaterialParams& p)
{
  setup.validate();
  cfg.validate();
  const QuadratureSet quad = make_quadrature(setup, cfg.quadrature, cfg.cells_x, cfg.cells_y);
  quad.validate(setup.L * setup.W);
  const NetworkParams U0 = init_params(cfg.seed, 2);
  const NetworkParams P0 = init_params(director_seed(cfg.seed), 1);

  TrainResult res;
  std::vector<double> x;
  {
    const EnergyLoss probe(setup, quad, p, U0, P0);
    x = probe.pack(U0, P0);
  }

  for (double frac : cfg.continuation) {
    CaseSetup stage = setup;
    stage.delta_L = frac * setup.delta_L;
    const EnergyLoss loss(stage, quad, p, U0, P0);
    detail::run_adam(loss, x, cfg, cfg.continuation_epochs, res.history);
  }

  const EnergyLoss loss(setup, quad, p, U0, P0);
  detail::run_adam(loss, x, cfg, cfg.epochs, res.history);

  if (cfg.optimizer == OptimizerKind::adam_lbfgs && cfg.lbfgs_iterations > 0) {
    LbfgsOptions lo;
    lo.memory = cfg.lbfgs_memory;
    lo.max_iterations = cfg.lbfgs_iterations;
    lo.gradient_tolerance = cfg.lbfgs_gradient_tolerance;
    const std::size_t base = res.history.size();
    std::vector<double> g0(x.size());
    res.history.push_back({base, loss(x, g0)});
    const auto r = lbfgs_minimize(loss, x, lo, [&](std::size_t it, double f) {
      if (!std::isfinite(f))
        throw DivergedTraining(base + it, "loss is not finite");
      res.history.push_back({base + it, f});
      if (cfg.on_log && cfg.log_every > 0 && (base + it) % cfg.log_every == 0)
        cfg.on_log(base + it, f);
    });
    res.finisher_status = to_string(r.status);
  }

  std::vector<double> g(x.size());
  res.final_loss = loss(x, g);
  if (!std::isfinite(res.final_loss))
    throw DivergedTraining(res.history.size(), "loss is not finite");
  res.gradient_norm = std::sqrt(detail::dot(g, g));
  loss.unpack(x, res.netU, res.netPhi);
  return res;
}

/// Dense evaluation of the trained fields on a lattice (corners included).
inline FieldGrid sample_solution(const NetworkParams& netU, const NetworkParams& netPhi, const CaseSetup& c,
                                 const GridSpec& spec)
{
  FieldGrid grid;
  grid.nx = spec.nx;
  grid.ny = spec.ny;
  const std::size_t N = spec.nx * spec.ny;
  if (N == 0)
    return grid;
  Matrix X(2, static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j < spec.ny; ++j)
    for (std::size_t i = 0; i < spec.nx; ++i) {
      const Vec2 p = spec.point(i, j);
      X(0, static_cast<Eigen::Index>(j * spec.nx + i)) = p.x;
      X(1, static_cast<Eigen::Index>(j * spec.nx + i)) = p.y;
    }
  const Matrix block = seed_identity_tangents(X);
  const Matrix ou = forward_tangents(netU, block, N).output;
  const Matrix op = forward_tangents(netPhi, block, N).output;
  const auto n = static_cast<Eigen::Index>(N);
  grid.samples.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const auto c2 = static_cast<Eigen::Index>(k);
    const Vec2 Xk{X(0, c2), X(1, c2)};
    const auto u = displacement_ansatz(c, Xk, {ou(0, c2), ou(1, c2)},
                                       {ou(0, n + c2), ou(0, 2 * n + c2), ou(1, n + c2), ou(1, 2 * n + c2)});
    const auto d = director_ansatz(c, Xk, op(0, c2), {op(0, n + c2), op(0, 2 * n + c2)});
    grid.samples[k] = {Xk, u.u, d.phi, Mat2::identity() + u.gradu, d.d, d.gradd};
  }
  return grid;
}

/// Kinematic samples at the training quadrature points.
inline std::vector<FieldSample> quadrature_samples(const NetworkParams& netU, const NetworkParams& netPhi,
                                                   const CaseSetup& c, const QuadratureSet& quad)
{
  std::vector<FieldSample> out;
  out.reserve(quad.points.size());
  for (const auto& q : quad.points) {
    const auto u = displacement(netU, c, q.X);
    const auto d = director(netPhi, c, q.X);
    out.push_back({q.X, u.u, d.phi, Mat2::identity() + u.gradu, d.d, d.gradd});
  }
  return out;
}

} // namespace cosserat
