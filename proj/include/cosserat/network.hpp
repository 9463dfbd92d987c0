#pragma once

/**
 * \file network.hpp
 * \brief DeformationNet / DirectorNet and the ansatz layers that build
 * admissible fields from their raw outputs.
 *
 *   u(X)   = (X/L dL, 0) + X (L - X) u~(X)
 *   phi(X) = phi0 + X phi~(X),   d = (cos phi, sin phi)
 *
 * u is pinned on both vertical edges and phi on the left edge for any
 * parameter values; |d| = 1 holds structurally. Inputs enter unnormalized.
 */

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosserat/errors.hpp"
#include "cosserat/graddiff.hpp"
#include "cosserat/material.hpp"
#include "cosserat/tensor2.hpp"

namespace cosserat {

inline constexpr std::size_t hidden_width = 64;
inline constexpr std::size_t hidden_layers = 3;

struct CaseSetup
{
  double L = 1.0;
  double W = 0.2;
  double phi0 = 0.0;
  double delta_L = 0.1;

  void validate() const
  {
    if (!(L > 0.0) || !(W > 0.0))
      throw ConfigError("case: L and W must be positive");
    if (!(delta_L >= 0.0))
      throw ConfigError("case: delta_L must be non-negative");
  }

  Vec2 reference_director() const { return director_from_angle(phi0); }
};

/// Layer sizes {2, 64, 64, 64, outputs}.
inline std::vector<std::size_t> standard_architecture(std::size_t outputs)
{
  std::vector<std::size_t> a{2};
  for (std::size_t i = 0; i < hidden_layers; ++i)
    a.push_back(hidden_width);
  a.push_back(outputs);
  return a;
}

/// Weights ~ N(0, 1/fan_in), biases zero. Deterministic for a given seed.
inline NetworkParams init_params(std::uint64_t seed, const std::vector<std::size_t>& sizes)
{
  if (sizes.size() < 2)
    throw ShapeMismatch("architecture needs at least an input and an output size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NetworkParams net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    const auto rows = static_cast<Eigen::Index>(sizes[l + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes[l]);
    layer.W.resize(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        layer.W(i, j) = scale * normal(rng);
    layer.b = Vector::Zero(rows);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline NetworkParams init_params(std::uint64_t seed, std::size_t outputs)
{
  return init_params(seed, standard_architecture(outputs));
}

/// Network with every weight and bias zero.
inline NetworkParams zero_params(std::size_t outputs)
{
  NetworkParams net = init_params(0, outputs);
  for (auto& l : net.layers) {
    l.W.setZero();
    l.b.setZero();
  }
  return net;
}

namespace detail {
inline void check_domain(const CaseSetup& c, const Vec2& X)
{
  constexpr double slack = 1e-12;
  if (X.x < -slack || X.x > c.L + slack || X.y < -slack || X.y > c.W + slack)
    throw OutOfDomain("point (" + std::to_string(X.x) + ", " + std::to_string(X.y) + ") outside the reference domain");
}
} // namespace detail

struct DisplacementSample
{
  Vec2 u{};
  Mat2 gradu{};
};

/// Builds u and grad u from raw network output and its input Jacobian.
inline DisplacementSample displacement_ansatz(const CaseSetup& c, const Vec2& X, const Vec2& raw, const Mat2& raw_grad)
{
  const double g = X.x * (c.L - X.x);
  const Vec2 dg{c.L - 2.0 * X.x, 0.0};
  DisplacementSample s;
  s.u = Vec2{X.x / c.L * c.delta_L, 0.0} + g * raw;
  s.gradu = Mat2{c.delta_L / c.L, 0.0, 0.0, 0.0} + outer(raw, dg) + g * raw_grad;
  return s;
}

struct DirectorSample
{
  double phi = 0.0;
  Vec2 d{};
  Mat2 gradd{};
  Vec2 gradphi{};
};

inline DirectorSample director_ansatz(const CaseSetup& c, const Vec2& X, double raw, const Vec2& raw_grad)
{
  DirectorSample s;
  s.phi = c.phi0 + X.x * raw;
  s.gradphi = Vec2{raw, 0.0} + X.x * raw_grad;
  s.d = director_from_angle(s.phi);
  s.gradd = outer(perp(s.d), s.gradphi);
  return s;
}

inline DisplacementSample displacement(const NetworkParams& netU, const CaseSetup& c, const Vec2& X)
{
  detail::check_domain(c, X);
  if (netU.output_dim() != 2)
    throw ShapeMismatch("deformation network must have two outputs");
  const auto out = forward_with_input_jacobian(netU, X);
  const Vec2 raw{out[0].value, out[1].value};
  const Mat2 raw_grad{out[0].d_dX.x, out[0].d_dX.y, out[1].d_dX.x, out[1].d_dX.y};
  return displacement_ansatz(c, X, raw, raw_grad);
}

inline DirectorSample director(const NetworkParams& netPhi, const CaseSetup& c, const Vec2& X)
{
  detail::check_domain(c, X);
  if (netPhi.output_dim() != 1)
    throw ShapeMismatch("director network must have one output");
  const auto out = forward_with_input_jacobian(netPhi, X);
  return director_ansatz(c, X, out[0].value, out[0].d_dX);
}

// ---------------------------------------------------------------------------
// Checkpoints: a JSON document holding the architecture, provenance and the
// flat parameter vector (layer-major, row-major weights then biases). Doubles
// are written with round-trip precision.

inline constexpr int checkpoint_version = 1;

struct Checkpoint
{
  std::string role; ///< "deformation" or "director"
  std::uint64_t seed = 0;
  CaseSetup setup;
  NetworkParams net;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c)
{
  nlohmann::json arch = nlohmann::json::array();
  arch.push_back(c.net.input_dim());
  for (const auto& l : c.net.layers)
    arch.push_back(static_cast<std::size_t>(l.W.rows()));
  return {{"format", "cosserat-mlp"},
          {"version", checkpoint_version},
          {"role", c.role},
          {"activation", "tanh"},
          {"architecture", arch},
          {"seed", c.seed},
          {"case", {{"L", c.setup.L}, {"W", c.setup.W}, {"phi0", c.setup.phi0}, {"delta_L", c.setup.delta_L}}},
          {"parameters", c.net.flatten()}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j)
{
  try {
    if (j.at("format").get<std::string>() != "cosserat-mlp")
      throw IoError("checkpoint: unknown format");
    if (j.at("version").get<int>() != checkpoint_version)
      throw IoError("checkpoint: unsupported version");
    Checkpoint c;
    c.role = j.at("role").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& cs = j.at("case");
    c.setup = {cs.at("L").get<double>(), cs.at("W").get<double>(), cs.at("phi0").get<double>(),
               cs.at("delta_L").get<double>()};
    const auto arch = j.at("architecture").get<std::vector<std::size_t>>();
    c.net = init_params(0, arch);
    c.net.assign(j.at("parameters").get<std::vector<double>>());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeMismatch& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path)
{
  std::ofstream os(path);
  if (!os)
    throw IoError("cannot open '" + path + "' for writing");
  os << checkpoint_to_json(c).dump() << '\n';
  if (!os)
    throw IoError("write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path)
{
  std::ifstream is(path);
  if (!is)
    throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

} // namespace cosserat
