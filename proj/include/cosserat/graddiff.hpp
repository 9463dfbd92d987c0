#pragma once

/**
 * \file graddiff.hpp
 * \brief Differentiation engine for the network solver.
 *
 * Two mechanisms live here:
 *
 *  - Tangent-augmented MLP passes. The forward pass carries, for every layer,
 *    the activations together with their derivatives along each input
 *    direction, so network outputs come with an exact input Jacobian. The
 *    matching reverse pass back-propagates adjoints of both the outputs and
 *    their input derivatives into the weights, which is what a loss built
 *    from grad u and grad phi needs.
 *
 *  - A small scalar reverse-mode tape for arbitrary scalar losses of a flat
 *    parameter vector (used by tests and for losses without a hand-written
 *    adjoint).
 *
 * Parameter layout is layer-major, each layer's weights (row-major) followed
 * by its biases.
 */

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cosserat/errors.hpp"
#include "cosserat/tensor2.hpp"

namespace cosserat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DenseLayer
{
  Matrix W; ///< out x in
  Vector b; ///< out
};

/// Fully connected network: tanh on every layer except the last, which is linear.
struct NetworkParams
{
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().W.cols()); }
  std::size_t output_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().W.rows()); }

  std::size_t parameter_count() const
  {
    std::size_t n = 0;
    for (const auto& l : layers)
      n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
  }

  /// Throws ShapeMismatch if consecutive layers do not chain.
  void check_shapes() const
  {
    if (layers.empty())
      throw ShapeMismatch("network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].b.size() != layers[l].W.rows())
        throw ShapeMismatch("layer " + std::to_string(l) + ": bias length differs from weight rows");
      if (l > 0 && layers[l].W.cols() != layers[l - 1].W.rows())
        throw ShapeMismatch("layer " + std::to_string(l) + ": input width differs from previous output width");
    }
  }

  std::vector<double> flatten() const
  {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers) {
      for (Eigen::Index i = 0; i < l.W.rows(); ++i)
        for (Eigen::Index j = 0; j < l.W.cols(); ++j)
          out.push_back(l.W(i, j));
      for (Eigen::Index i = 0; i < l.b.size(); ++i)
        out.push_back(l.b(i));
    }
    return out;
  }

  void assign(std::span<const double> flat)
  {
    if (flat.size() != parameter_count())
      throw ShapeMismatch("flat parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                          std::to_string(parameter_count()));
    std::size_t k = 0;
    for (auto& l : layers) {
      for (Eigen::Index i = 0; i < l.W.rows(); ++i)
        for (Eigen::Index j = 0; j < l.W.cols(); ++j)
          l.W(i, j) = flat[k++];
      for (Eigen::Index i = 0; i < l.b.size(); ++i)
        l.b(i) = flat[k++];
    }
  }

  friend bool operator==(const NetworkParams& a, const NetworkParams& b)
  {
    if (a.layers.size() != b.layers.size())
      return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      const auto& x = a.layers[l];
      const auto& y = b.layers[l];
      if (x.W.rows() != y.W.rows() || x.W.cols() != y.W.cols() || x.W != y.W || x.b != y.b)
        return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Tangent-augmented batched passes

/**
 * Activations of one batched forward pass. Every block matrix stores the
 * values of N points in its first N columns followed by one N-column block
 * per tangent direction.
 */
struct TangentPass
{
  std::size_t n_points = 0;
  std::size_t n_tangents = 0;
  std::vector<Matrix> inputs; ///< input block of each layer
  std::vector<Matrix> slopes; ///< 1 - tanh^2 of hidden pre-activations (value columns)
  Matrix output;              ///< k x N(1 + n_tangents)

  auto value(const Matrix& m) const { return m.leftCols(static_cast<Eigen::Index>(n_points)); }
  auto tangent(const Matrix& m, std::size_t t) const
  {
    return m.middleCols(static_cast<Eigen::Index>((t + 1) * n_points), static_cast<Eigen::Index>(n_points));
  }
};

/// Seeds input tangents with the identity: tangent t of point p is e_t.
inline Matrix seed_identity_tangents(const Matrix& X)
{
  const Eigen::Index n = X.cols(), d = X.rows();
  Matrix block = Matrix::Zero(d, n * (d + 1));
  block.leftCols(n) = X;
  for (Eigen::Index t = 0; t < d; ++t)
    block.row(t).segment((t + 1) * n, n).setOnes();
  return block;
}

/// Forward pass over an input block [X | dX/dt_1 | ... ]. Keeps what the
/// reverse pass needs.
inline TangentPass forward_tangents(const NetworkParams& net, const Matrix& input_block, std::size_t n_points)
{
  net.check_shapes();
  if (static_cast<std::size_t>(input_block.rows()) != net.input_dim())
    throw ShapeMismatch("input rows differ from network input dimension");
  if (n_points == 0 || input_block.cols() % static_cast<Eigen::Index>(n_points) != 0)
    throw ShapeMismatch("input block width is not a multiple of the point count");

  TangentPass pass;
  pass.n_points = n_points;
  pass.n_tangents = static_cast<std::size_t>(input_block.cols()) / n_points - 1;
  const auto N = static_cast<Eigen::Index>(n_points);
  const std::size_t L = net.layers.size();
  pass.inputs.reserve(L);
  pass.slopes.reserve(L - 1);

  Matrix A = input_block;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = net.layers[l];
    Matrix Z = layer.W * A;
    Z.leftCols(N).colwise() += layer.b;
    pass.inputs.push_back(std::move(A));
    if (l + 1 == L) {
      pass.output = std::move(Z);
      break;
    }
    Z.leftCols(N) = Z.leftCols(N).array().tanh().matrix();
    Matrix S = (1.0 - Z.leftCols(N).array().square()).matrix();
    for (std::size_t t = 0; t < pass.n_tangents; ++t) {
      auto blk = Z.middleCols(static_cast<Eigen::Index>(t + 1) * N, N);
      blk = (blk.array() * S.array()).matrix();
    }
    pass.slopes.push_back(std::move(S));
    A = std::move(Z);
  }
  return pass;
}

/**
 * Reverse pass. `output_adjoint` has the layout of pass.output and holds
 * dLoss/d(output values and output tangents). Adds dLoss/dparams into `grad`
 * (flat layout) and returns the adjoint of the input block.
 */
inline Matrix backward_tangents(const NetworkParams& net, const TangentPass& pass, const Matrix& output_adjoint,
                                std::span<double> grad)
{
  if (grad.size() != net.parameter_count())
    throw ShapeMismatch("gradient buffer size differs from parameter count");
  const auto N = static_cast<Eigen::Index>(pass.n_points);
  const std::size_t L = net.layers.size();

  // flat offsets of each layer
  std::vector<std::size_t> offset(L + 1, 0);
  for (std::size_t l = 0; l < L; ++l)
    offset[l + 1] = offset[l] + static_cast<std::size_t>(net.layers[l].W.size() + net.layers[l].b.size());

  Matrix gZ = output_adjoint;
  for (std::size_t li = L; li-- > 0;) {
    const auto& layer = net.layers[li];
    const Matrix& A = pass.inputs[li];
    const Matrix dW = gZ * A.transpose();
    const Vector db = gZ.leftCols(N).rowwise().sum();
    std::size_t k = offset[li];
    for (Eigen::Index i = 0; i < dW.rows(); ++i)
      for (Eigen::Index j = 0; j < dW.cols(); ++j)
        grad[k++] += dW(i, j);
    for (Eigen::Index i = 0; i < db.size(); ++i)
      grad[k++] += db(i);

    Matrix gA = layer.W.transpose() * gZ;
    if (li == 0)
      return gA;

    // A = [H | S.Zt_1 | ...] with H = tanh(Z), S = 1 - H^2 and dS/dZ = -2 H S.
    // Zt_t = A_t / S is recovered through the stored tangent activation.
    const Matrix& S = pass.slopes[li - 1];
    const auto H = A.leftCols(N).array();
    Eigen::ArrayXXd acc = gA.leftCols(N).array();
    Eigen::ArrayXXd cross = Eigen::ArrayXXd::Zero(A.rows(), N);
    for (std::size_t t = 0; t < pass.n_tangents; ++t) {
      const auto off = static_cast<Eigen::Index>(t + 1) * N;
      // A_t = S * Zt  =>  d/dZ of (gA_t . A_t) = gA_t * Zt * dS/dZ = -2 H gA_t A_t
      cross += gA.middleCols(off, N).array() * A.middleCols(off, N).array();
      gA.middleCols(off, N) = (gA.middleCols(off, N).array() * S.array()).matrix();
    }
    gA.leftCols(N) = (acc * S.array() - 2.0 * H * cross).matrix();
    gZ = std::move(gA);
  }
  return gZ;
}

/// Outputs and exact input Jacobian at a single point.
struct PointJacobian
{
  Vector outputs;  ///< k
  Matrix jacobian; ///< k x n_in
};

inline PointJacobian forward_with_input_jacobian(const NetworkParams& net, std::span<const double> x)
{
  if (x.size() != net.input_dim())
    throw ShapeMismatch("input length differs from network input dimension");
  Matrix X(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i)
    X(static_cast<Eigen::Index>(i), 0) = x[i];
  const TangentPass pass = forward_tangents(net, seed_identity_tangents(X), 1);
  PointJacobian pj;
  pj.outputs = pass.output.col(0);
  pj.jacobian = pass.output.rightCols(pass.output.cols() - 1);
  return pj;
}

/// A network output together with its derivative along the planar inputs.
struct DualBundle
{
  double value = 0.0;
  Vec2 d_dX{};
};

inline std::vector<DualBundle> forward_with_input_jacobian(const NetworkParams& net, const Vec2& X)
{
  const double x[2] = {X.x, X.y};
  const PointJacobian pj = forward_with_input_jacobian(net, std::span<const double>(x, 2));
  std::vector<DualBundle> out(static_cast<std::size_t>(pj.outputs.size()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out[k] = {pj.outputs(i), {pj.jacobian(i, 0), pj.jacobian(i, 1)}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scalar reverse-mode tape

class Tape;

/// Handle to a scalar recorded on a Tape.
struct Var
{
  Tape* tape = nullptr;
  std::size_t index = 0;
  double value = 0.0;
};

class Tape
{
public:
  Var variable(double v)
  {
    nodes_.push_back({{npos, npos}, {0.0, 0.0}});
    return {this, nodes_.size() - 1, v};
  }

  Var record(double v, std::size_t p0, double d0, std::size_t p1 = npos, double d1 = 0.0)
  {
    nodes_.push_back({{p0, p1}, {d0, d1}});
    return {this, nodes_.size() - 1, v};
  }

  /// Adjoints of every recorded node with respect to `out`.
  std::vector<double> gradient(const Var& out) const
  {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[out.index] = 1.0;
    for (std::size_t i = out.index + 1; i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0)
        continue;
      for (int k = 0; k < 2; ++k)
        if (nodes_[i].parent[k] != npos)
          adj[nodes_[i].parent[k]] += a * nodes_[i].partial[k];
    }
    return adj;
  }

  std::size_t size() const { return nodes_.size(); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  struct Node
  {
    std::size_t parent[2];
    double partial[2];
  };
  std::vector<Node> nodes_;
};

namespace detail {
inline Var constant(Tape* t, double v) { return t->record(v, Tape::npos, 0.0); }
inline Tape* tape_of(const Var& a, const Var& b) { return a.tape ? a.tape : b.tape; }
} // namespace detail

inline Var operator+(const Var& a, const Var& b)
{
  return detail::tape_of(a, b)->record(a.value + b.value, a.index, 1.0, b.index, 1.0);
}
inline Var operator-(const Var& a, const Var& b)
{
  return detail::tape_of(a, b)->record(a.value - b.value, a.index, 1.0, b.index, -1.0);
}
inline Var operator*(const Var& a, const Var& b)
{
  return detail::tape_of(a, b)->record(a.value * b.value, a.index, b.value, b.index, a.value);
}
inline Var operator/(const Var& a, const Var& b)
{
  return detail::tape_of(a, b)->record(a.value / b.value, a.index, 1.0 / b.value, b.index,
                                       -a.value / (b.value * b.value));
}
inline Var operator-(const Var& a) { return a.tape->record(-a.value, a.index, -1.0); }
inline Var operator+(const Var& a, double c) { return a.tape->record(a.value + c, a.index, 1.0); }
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return a.tape->record(a.value - c, a.index, 1.0); }
inline Var operator-(double c, const Var& a) { return a.tape->record(c - a.value, a.index, -1.0); }
inline Var operator*(const Var& a, double c) { return a.tape->record(a.value * c, a.index, c); }
inline Var operator*(double c, const Var& a) { return a * c; }
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }

inline Var tanh(const Var& a)
{
  const double t = std::tanh(a.value);
  return a.tape->record(t, a.index, 1.0 - t * t);
}
inline Var exp(const Var& a)
{
  const double e = std::exp(a.value);
  return a.tape->record(e, a.index, e);
}
inline Var log(const Var& a) { return a.tape->record(std::log(a.value), a.index, 1.0 / a.value); }
inline Var sin(const Var& a) { return a.tape->record(std::sin(a.value), a.index, std::cos(a.value)); }
inline Var cos(const Var& a) { return a.tape->record(std::cos(a.value), a.index, -std::sin(a.value)); }
inline Var sqrt(const Var& a)
{
  const double s = std::sqrt(a.value);
  return a.tape->record(s, a.index, 0.5 / s);
}

/// A loss that supplies its own gradient (e.g. through a hand-written adjoint).
template <class L>
concept DifferentiableLoss = requires(const L& loss, std::span<const double> x, std::span<double> g) {
  { loss.value_and_gradient(x, g) } -> std::convertible_to<double>;
};

/// A loss written generically over the tape scalar.
template <class F>
concept TapeLoss = requires(const F& f, std::span<const Var> x) {
  { f(x) } -> std::convertible_to<Var>;
};

struct LossGradient
{
  double value = 0.0;
  std::vector<double> gradient;
};

template <DifferentiableLoss L>
LossGradient loss_gradient(const L& loss, std::span<const double> params)
{
  LossGradient out;
  out.gradient.assign(params.size(), 0.0);
  out.value = loss.value_and_gradient(params, out.gradient);
  if (!std::isfinite(out.value))
    throw NonFiniteLoss("loss is not finite");
  return out;
}

template <TapeLoss F>
LossGradient loss_gradient(const F& loss, std::span<const double> params)
{
  Tape tape;
  std::vector<Var> x;
  x.reserve(params.size());
  for (double p : params)
    x.push_back(tape.variable(p));
  const Var y = loss(std::span<const Var>(x));
  if (!std::isfinite(y.value))
    throw NonFiniteLoss("loss is not finite");
  LossGradient out;
  out.value = y.value;
  out.gradient.resize(params.size());
  if (y.tape == nullptr) // loss independent of every parameter
    return out;
  const std::vector<double> adj = tape.gradient(y);
  for (std::size_t i = 0; i < params.size(); ++i)
    out.gradient[i] = adj[x[i].index];
  return out;
}

} // namespace cosserat
