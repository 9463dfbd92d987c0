#pragma once

/**
 * \file optim.hpp
 * \brief Deterministic first-order optimizers over flat parameter vectors.
 *
 * Objectives are callables `double f(std::span<const double> x, std::span<double> g)`
 * returning the value and writing the gradient. An objective may throw
 * NonPositiveJacobian for inadmissible points; the line search treats that
 * as an infinitely high energy and shortens the step.
 *
 * Second-order objectives additionally take a `SparseHessian*` that, when
 * non-null, receives the Hessian at x.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cosserat/errors.hpp"

namespace cosserat {

template <class F>
concept Objective = requires(F& f, std::span<const double> x, std::span<double> g) {
  { f(x, g) } -> std::convertible_to<double>;
};

namespace detail {
inline double dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}
inline double max_abs(std::span<const double> a)
{
  double m = 0.0;
  for (double v : a)
    m = std::max(m, std::abs(v));
  return m;
}

/**
 * Halving backtracking from a unit step along `dir`. Accepts on the Armijo
 * condition, or within the relative noise level of f on the approximate
 * Wolfe bound of the directional derivative. Inadmissible trial points
 * (NonPositiveJacobian) count as rejections.
 */
template <class Eval>
bool backtrack(Eval&& eval, std::span<const double> x, double f, std::span<const double> dir, double slope,
               double armijo, double noise_tolerance, std::size_t max_backtracks, std::vector<double>& xt,
               std::vector<double>& gt, double& ft, std::size_t& evaluations)
{
  const std::size_t n = x.size();
  double step = 1.0;
  for (std::size_t bt = 0; bt <= max_backtracks; ++bt) {
    for (std::size_t i = 0; i < n; ++i)
      xt[i] = x[i] + step * dir[i];
    bool admissible = true;
    try {
      ft = eval(std::span<const double>(xt), std::span<double>(gt));
    } catch (const NonPositiveJacobian&) {
      admissible = false;
    }
    ++evaluations;
    if (admissible && std::isfinite(ft)) {
      const bool sufficient = ft <= f + armijo * step * slope;
      const bool approx_wolfe =
        ft <= f + noise_tolerance * std::abs(f) && dot(gt, dir) <= (2.0 * armijo - 1.0) * slope;
      if (sufficient || approx_wolfe)
        return true;
    }
    step *= 0.5;
  }
  return false;
}
} // namespace detail

struct AdamOptions
{
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam state for one flat parameter vector.
class Adam
{
public:
  Adam(std::size_t n, AdamOptions opt) : opt_(opt), m_(n, 0.0), v_(n, 0.0) {}

  /// Applies one update with the given learning rate (defaults to the configured one).
  void step(std::span<double> x, std::span<const double> g, double lr = -1.0)
  {
    if (lr < 0.0)
      lr = opt_.learning_rate;
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g[i];
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g[i] * g[i];
      const double mh = m_[i] / c1;
      const double vh = v_[i] / c2;
      x[i] -= lr * mh / (std::sqrt(vh) + opt_.epsilon);
    }
  }

  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return opt_; }

private:
  AdamOptions opt_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct LbfgsOptions
{
  std::size_t memory = 20;
  std::size_t max_iterations = 1000;
  /// Converged when max |g_i| <= gradient_tolerance.
  double gradient_tolerance = 1e-8;
  /// Also stop when a full iteration changes f by less than this relative amount
  /// `stall_iterations` times in a row. Zero disables.
  double relative_decrease_tolerance = 0.0;
  std::size_t stall_iterations = 10;
  double armijo = 1e-4;
  std::size_t max_backtracks = 50;
  /// Relative noise level of f. Within it a step is also accepted when the
  /// directional derivative at the trial point satisfies the approximate Wolfe
  /// bound, so the search keeps progressing once f differences reach roundoff.
  double noise_tolerance = 1e-10;
};

enum class MinimizerStatus { converged, stalled, max_iterations, line_search_failed };

inline const char* to_string(MinimizerStatus s)
{
  switch (s) {
  case MinimizerStatus::converged: return "converged";
  case MinimizerStatus::stalled: return "stalled";
  case MinimizerStatus::max_iterations: return "max_iterations";
  case MinimizerStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

struct MinimizerResult
{
  double f = 0.0;
  std::vector<double> gradient;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  MinimizerStatus status = MinimizerStatus::max_iterations;
};

/**
 * Limited-memory BFGS with backtracking Armijo line search. `x` is updated in
 * place. `on_iteration(iter, f)` is called after every accepted step.
 */
template <Objective F>
MinimizerResult lbfgs_minimize(F&& objective, std::span<double> x, const LbfgsOptions& opt,
                           const std::function<void(std::size_t, double)>& on_iteration = {})
{
  const std::size_t n = x.size();
  MinimizerResult res;
  res.gradient.assign(n, 0.0);
  if (n == 0) {
    std::vector<double> g;
    res.f = objective(std::span<const double>(x.data(), 0), std::span<double>(g));
    res.status = MinimizerStatus::converged;
    return res;
  }

  std::vector<double> g(n), xt(n), gt(n), dir(n), alpha_hist;
  double f = objective(std::span<const double>(x.data(), n), std::span<double>(g));
  ++res.evaluations;
  if (!std::isfinite(f))
    throw NonFiniteLoss("objective is not finite at the starting point");

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::size_t stalls = 0;

  for (std::size_t it = 0;; ++it) {
    if (detail::max_abs(g) <= opt.gradient_tolerance) {
      res.status = MinimizerStatus::converged;
      break;
    }
    if (it == opt.max_iterations) {
      res.status = MinimizerStatus::max_iterations;
      break;
    }

    // two-loop recursion
    for (std::size_t i = 0; i < n; ++i)
      dir[i] = -g[i];
    alpha_hist.assign(S.size(), 0.0);
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha_hist[k] = rho[k] * detail::dot(S[k], dir);
      for (std::size_t i = 0; i < n; ++i)
        dir[i] -= alpha_hist[k] * Y[k][i];
    }
    double gamma = 1.0;
    if (!S.empty())
      gamma = detail::dot(S.back(), Y.back()) / detail::dot(Y.back(), Y.back());
    else
      gamma = 1.0 / std::max(1.0, std::sqrt(detail::dot(g, g)));
    for (std::size_t i = 0; i < n; ++i)
      dir[i] *= gamma;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * detail::dot(Y[k], dir);
      for (std::size_t i = 0; i < n; ++i)
        dir[i] += (alpha_hist[k] - beta) * S[k][i];
    }

    double slope = detail::dot(g, dir);
    if (!(slope < 0.0)) {
      // not a descent direction; restart from steepest descent
      S.clear();
      Y.clear();
      rho.clear();
      const double sc = 1.0 / std::max(1.0, std::sqrt(detail::dot(g, g)));
      for (std::size_t i = 0; i < n; ++i)
        dir[i] = -g[i] * sc;
      slope = detail::dot(g, dir);
    }

    double ft = 0.0;
    const bool accepted = detail::backtrack(objective, x, f, dir, slope, opt.armijo, opt.noise_tolerance,
                                            opt.max_backtracks, xt, gt, ft, res.evaluations);
    if (!accepted) {
      if (!S.empty()) {
        // retry once with the curvature memory cleared
        S.clear();
        Y.clear();
        rho.clear();
        --it;
        continue;
      }
      res.status = MinimizerStatus::line_search_failed;
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xt[i] - x[i];
      y[i] = gt[i] - g[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-300 * std::max(1.0, detail::dot(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    const double df = f - ft;
    std::copy(xt.begin(), xt.end(), x.begin());
    std::swap(g, gt);
    f = ft;
    res.iterations = it + 1;
    if (on_iteration)
      on_iteration(it + 1, f);

    if (opt.relative_decrease_tolerance > 0.0) {
      if (df <= opt.relative_decrease_tolerance * std::max(std::abs(f), 1e-300)) {
        if (++stalls >= opt.stall_iterations) {
          res.status = MinimizerStatus::stalled;
          break;
        }
      } else {
        stalls = 0;
      }
    }
  }
  res.f = f;
  res.gradient = std::move(g);
  return res;
}

using SparseHessian = Eigen::SparseMatrix<double>;

template <class F>
concept SecondOrderObjective = requires(F& f, std::span<const double> x, std::span<double> g, SparseHessian* H) {
  { f(x, g, H) } -> std::convertible_to<double>;
};

struct NewtonOptions
{
  std::size_t max_iterations = 100;
  /// Converged when max |g_i| <= gradient_tolerance.
  double gradient_tolerance = 1e-8;
  double armijo = 1e-4;
  std::size_t max_backtracks = 50;
  double noise_tolerance = 1e-10;
};

/**
 * Damped Newton iteration with a sparse LDLT solve. An indefinite Hessian is
 * shifted by a growing multiple of the identity until the factorization is
 * positive definite; the step is globalized by the same backtracking search
 * as lbfgs_minimize.
 */
template <SecondOrderObjective F>
MinimizerResult newton_minimize(F&& objective, std::span<double> x, const NewtonOptions& opt)
{
  const std::size_t n = x.size();
  MinimizerResult res;
  res.gradient.assign(n, 0.0);
  std::vector<double> g(n), xt(n), gt(n), dir(n);
  SparseHessian H;
  double f = objective(std::span<const double>(x.data(), n), std::span<double>(g), &H);
  ++res.evaluations;
  if (!std::isfinite(f))
    throw NonFiniteLoss("objective is not finite at the starting point");
  auto first_order = [&](std::span<const double> z, std::span<double> gz) { return objective(z, gz, nullptr); };

  Eigen::SimplicialLDLT<SparseHessian> ldlt;
  bool analyzed = false;
  const auto N = static_cast<Eigen::Index>(n);
  for (std::size_t it = 0;; ++it) {
    if (n == 0 || detail::max_abs(g) <= opt.gradient_tolerance) {
      res.status = MinimizerStatus::converged;
      break;
    }
    if (it == opt.max_iterations) {
      res.status = MinimizerStatus::max_iterations;
      break;
    }
    if (!analyzed) {
      ldlt.analyzePattern(H);
      analyzed = true;
    }
    double max_diag = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
      max_diag = std::max(max_diag, std::abs(H.coeff(i, i)));
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), N);
    Eigen::Map<Eigen::VectorXd> dv(dir.data(), N);
    bool have_direction = false;
    double shift = 0.0;
    for (int attempt = 0; attempt < 12 && max_diag > 0.0; ++attempt) {
      SparseHessian A = H;
      if (shift > 0.0)
        for (Eigen::Index i = 0; i < N; ++i)
          A.coeffRef(i, i) += shift;
      ldlt.factorize(A);
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        dv = -ldlt.solve(gv);
        if (dv.allFinite() && gv.dot(dv) < 0.0) {
          have_direction = true;
          break;
        }
      }
      shift = shift == 0.0 ? 1e-8 * max_diag : 10.0 * shift;
    }
    if (!have_direction) {
      const double sc = 1.0 / std::max({1.0, max_diag, gv.norm()});
      dv = -sc * gv;
    }
    const double slope = detail::dot(g, dir);

    double ft = 0.0;
    if (!detail::backtrack(first_order, x, f, dir, slope, opt.armijo, opt.noise_tolerance, opt.max_backtracks, xt,
                           gt, ft, res.evaluations)) {
      res.status = MinimizerStatus::line_search_failed;
      break;
    }
    std::copy(xt.begin(), xt.end(), x.begin());
    f = objective(std::span<const double>(x.data(), n), std::span<double>(g), &H);
    ++res.evaluations;
    res.iterations = it + 1;
  }
  res.f = f;
  res.gradient = std::move(g);
  return res;
}

} // namespace cosserat
