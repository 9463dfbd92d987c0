#pragma once

/**
 * \file stability.hpp
 * \brief Pointwise certification of candidate solutions against the
 * Legendre-Hadamard and rank-one convexity necessary conditions.
 *
 * Directions s, T are scanned on a uniform angular grid over [0, pi); the
 * quadratic form is even under s -> -s and T -> -T so the half circle
 * suffices. A sample that violates either inequality cannot be a stable
 * energy minimizer.
 */

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosserat/errors.hpp"
#include "cosserat/field_grid.hpp"
#include "cosserat/material.hpp"

namespace cosserat {

struct StabilityConfig
{
  std::size_t n_angles = 32;
  std::vector<double> b_values{0.0, 0.5, 1.0};
  std::vector<double> rank_one_magnitudes{0.1, 0.3};
  double tolerance = 1e-10;
  /// Rank-one probes with det(F + a(x)T) at or below this are skipped.
  double min_perturbed_jacobian = 0.1;

  void validate() const
  {
    if (n_angles < 4)
      throw ConfigError("stability: n_angles must be at least 4");
    if (!(tolerance > 0.0))
      throw ConfigError("stability: tolerance must be positive");
  }
};

inline Vec2 unit_direction(std::size_t k, std::size_t n)
{
  const double a = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(a), std::sin(a)};
}

struct LhMinimum
{
  double value = std::numeric_limits<double>::infinity();
  Vec2 s{};
  double b = 0.0;
  Vec2 T{};
};

inline LhMinimum lh_minimum_at(const KinematicState& st, const MaterialParams& p, const StabilityConfig& cfg)
{
  LhMinimum best;
  for (std::size_t i = 0; i < cfg.n_angles; ++i) {
    const Vec2 s = unit_direction(i, cfg.n_angles);
    for (std::size_t j = 0; j < cfg.n_angles; ++j) {
      const Vec2 T = unit_direction(j, cfg.n_angles);
      for (double b : cfg.b_values) {
        const double v = lh_quadratic_form(st, p, s, b, T);
        if (v < best.value)
          best = {v, s, b, T};
      }
    }
  }
  return best;
}

struct RankOneMinimum
{
  double value = std::numeric_limits<double>::infinity();
  Vec2 a{};
  double b = 0.0;
  Vec2 T{};
  std::size_t skipped = 0; ///< probes rejected by the perturbed-Jacobian cap
};

inline RankOneMinimum rank_one_minimum_at(const KinematicState& st, const MaterialParams& p,
                                          const StabilityConfig& cfg)
{
  RankOneMinimum best;
  const double W0 = energy_density(st, p);
  const StressSet s0 = stresses(st, p);
  for (std::size_t i = 0; i < cfg.n_angles; ++i) {
    const Vec2 s = unit_direction(i, cfg.n_angles);
    for (std::size_t j = 0; j < cfg.n_angles; ++j) {
      const Vec2 T = unit_direction(j, cfg.n_angles);
      for (double m : cfg.rank_one_magnitudes) {
        // both signs of a; the residual is not even in a
        for (double sign : {1.0, -1.0}) {
          const Vec2 a = (sign * m) * s;
          if (!(det(st.F + outer(a, T)) > cfg.min_perturbed_jacobian)) {
            best.skipped += cfg.b_values.size();
            continue;
          }
          for (double b : cfg.b_values) {
            const double v = rank_one_residual(st, p, W0, s0, a, b, T);
            if (v < best.value) {
              best.value = v;
              best.a = a;
              best.b = b;
              best.T = T;
            }
          }
        }
      }
    }
  }
  return best;
}

struct Violation
{
  std::size_t point = 0;
  std::string check; ///< "legendre_hadamard" or "rank_one"
  double value = 0.0;
};

struct StabilityReport
{
  std::size_t n_points = 0;
  LhMinimum min_lh;
  std::size_t min_lh_point = 0;
  RankOneMinimum min_rank_one;
  std::size_t min_rank_one_point = 0;
  std::size_t skipped_rank_one = 0;
  std::vector<Violation> violations;
  bool passed = true;
};

/// Throws InvalidField for the first sample with det F <= 0 (inverted()) or a
/// non-unit director.
inline void check_sample(const FieldSample& s, std::size_t index)
{
  const double J = det(s.F);
  if (!std::isfinite(J) || !(J > 0.0))
    throw InvalidField(index, "det F = " + std::to_string(J) + " is not positive", true);
  if (!(std::abs(norm(s.d) - 1.0) <= 1e-8))
    throw InvalidField(index, "director is not a unit vector", false);
}

/// Scans every sample. One violation entry is recorded per (sample, check)
/// whose minimum over the scanned directions falls below -tolerance.
inline StabilityReport certify_samples(std::span<const FieldSample> samples, const MaterialParams& p,
                                       const StabilityConfig& cfg)
{
  cfg.validate();
  for (std::size_t k = 0; k < samples.size(); ++k)
    check_sample(samples[k], k);

  StabilityReport rep;
  rep.n_points = samples.size();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const KinematicState st = samples[k].state();
    const LhMinimum lh = lh_minimum_at(st, p, cfg);
    if (lh.value < rep.min_lh.value) {
      rep.min_lh = lh;
      rep.min_lh_point = k;
    }
    if (lh.value < -cfg.tolerance)
      rep.violations.push_back({k, "legendre_hadamard", lh.value});

    const RankOneMinimum r1 = rank_one_minimum_at(st, p, cfg);
    rep.skipped_rank_one += r1.skipped;
    if (r1.value < rep.min_rank_one.value) {
      rep.min_rank_one = r1;
      rep.min_rank_one_point = k;
    }
    if (r1.value < -cfg.tolerance)
      rep.violations.push_back({k, "rank_one", r1.value});
  }
  rep.min_rank_one.skipped = rep.skipped_rank_one;
  rep.passed = rep.violations.empty();
  return rep;
}

inline StabilityReport certify_field(const FieldGrid& field, const MaterialParams& p, const StabilityConfig& cfg)
{
  return certify_samples(field.samples, p, cfg);
}

namespace detail {
inline nlohmann::json finite_or_null(double v)
{
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
inline nlohmann::json vec_json(const Vec2& v) { return nlohmann::json::array({v.x, v.y}); }
} // namespace detail

inline nlohmann::json to_json(const StabilityReport& r)
{
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : r.violations)
    v.push_back({{"point", x.point}, {"check", x.check}, {"value", x.value}});
  return {
    {"n_points", r.n_points},
    {"passed", r.passed},
    {"min_lh",
     {{"value", detail::finite_or_null(r.min_lh.value)},
      {"point", r.min_lh_point},
      {"s", detail::vec_json(r.min_lh.s)},
      {"b", r.min_lh.b},
      {"T", detail::vec_json(r.min_lh.T)}}},
    {"min_rank_one",
     {{"value", detail::finite_or_null(r.min_rank_one.value)},
      {"point", r.min_rank_one_point},
      {"a", detail::vec_json(r.min_rank_one.a)},
      {"b", r.min_rank_one.b},
      {"T", detail::vec_json(r.min_rank_one.T)}}},
    {"skipped_rank_one", r.skipped_rank_one},
    {"violations", std::move(v)},
  };
}

} // namespace cosserat
