#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosserat/errors.hpp"
#include "cosserat/material.hpp"
#include "cosserat/tensor2.hpp"

namespace cosserat {

/// One sampled material point of a solution.
struct FieldSample
{
  Vec2 X{};
  Vec2 u{};
  double phi = 0.0;
  Mat2 F = Mat2::identity();
  Vec2 d{1.0, 0.0};
  Mat2 gradd{};

  KinematicState state() const { return {F, d, gradd}; }
};

/// Samples on a uniform nx-by-ny lattice over [0,L]x[0,W]; point index is
/// j * nx + i with X varying fastest. Either solver produces one.
struct FieldGrid
{
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<FieldSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const FieldSample& at(std::size_t i, std::size_t j) const { return samples.at(j * nx + i); }
};

/// Lattice of evaluation points, corners included.
struct GridSpec
{
  std::size_t nx = 101;
  std::size_t ny = 21;
  double L = 1.0;
  double W = 0.2;

  Vec2 point(std::size_t i, std::size_t j) const
  {
    // end points exact
    const double x = (i + 1 == nx) ? L : L * static_cast<double>(i) / static_cast<double>(nx - 1);
    const double y = (j + 1 == ny) ? W : W * static_cast<double>(j) / static_cast<double>(ny - 1);
    return {x, y};
  }
};

inline constexpr const char* fieldgrid_csv_header =
  "X,Y,u_x,u_y,u_mag,u_mag_sq,phi,F11,F12,F21,F22,d_x,d_y,gradd11,gradd12,gradd21,gradd22";

namespace detail {

inline std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_for_write(const std::string& path)
{
  std::ofstream os(path, std::ios::out | std::ios::trunc);
  if (!os)
    throw IoError("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_for_read(const std::string& path)
{
  std::ifstream is(path);
  if (!is)
    throw IoError("cannot open '" + path + "' for reading");
  return is;
}

/// getline that also strips a trailing carriage return (CRLF files).
inline bool read_line(std::istream& is, std::string& line)
{
  if (!std::getline(is, line))
    return false;
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  return true;
}

/// Infers nx from the run length of the first row's Y value.
inline void infer_dims(FieldGrid& g)
{
  if (g.samples.empty()) {
    g.nx = g.ny = 0;
    return;
  }
  std::size_t nx = 1;
  while (nx < g.samples.size() && g.samples[nx].X.y == g.samples[0].X.y)
    ++nx;
  if (g.samples.size() % nx != 0)
    throw IoError("field grid rows are ragged");
  g.nx = nx;
  g.ny = g.samples.size() / nx;
}

} // namespace detail

inline void write_fieldgrid_csv(const FieldGrid& g, std::ostream& os)
{
  os << fieldgrid_csv_header << '\n';
  for (const auto& s : g.samples) {
    const double usq = dot(s.u, s.u);
    const double vals[] = {s.X.x,      s.X.y,      s.u.x,      s.u.y,      std::sqrt(usq), usq,
                           s.phi,      s.F.a11,    s.F.a12,    s.F.a21,    s.F.a22,        s.d.x,
                           s.d.y,      s.gradd.a11, s.gradd.a12, s.gradd.a21, s.gradd.a22};
    bool first = true;
    for (double v : vals) {
      if (!first)
        os << ',';
      os << detail::fmt17(v);
      first = false;
    }
    os << '\n';
  }
}

inline FieldGrid read_fieldgrid_csv(std::istream& is)
{
  std::string line;
  if (!detail::read_line(is, line) || line != fieldgrid_csv_header)
    throw IoError("field grid CSV: missing or unexpected header");
  FieldGrid g;
  std::size_t lineno = 1;
  while (detail::read_line(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    double v[17];
    std::istringstream ls(line);
    std::string cell;
    int n = 0;
    while (std::getline(ls, cell, ',')) {
      if (n == 17)
        throw IoError("field grid CSV: too many columns on line " + std::to_string(lineno));
      try {
        v[n++] = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("field grid CSV: bad number on line " + std::to_string(lineno));
      }
    }
    if (n != 17)
      throw IoError("field grid CSV: expected 17 columns on line " + std::to_string(lineno));
    FieldSample s;
    s.X = {v[0], v[1]};
    s.u = {v[2], v[3]};
    s.phi = v[6];
    s.F = {v[7], v[8], v[9], v[10]};
    s.d = {v[11], v[12]};
    s.gradd = {v[13], v[14], v[15], v[16]};
    g.samples.push_back(s);
  }
  detail::infer_dims(g);
  return g;
}

inline nlohmann::json fieldgrid_to_json(const FieldGrid& g)
{
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& s : g.samples) {
    const double usq = dot(s.u, s.u);
    pts.push_back({{"X", s.X.x},         {"Y", s.X.y},         {"u_x", s.u.x},       {"u_y", s.u.y},
                   {"u_mag", std::sqrt(usq)}, {"u_mag_sq", usq}, {"phi", s.phi},       {"F11", s.F.a11},
                   {"F12", s.F.a12},     {"F21", s.F.a21},     {"F22", s.F.a22},     {"d_x", s.d.x},
                   {"d_y", s.d.y},       {"gradd11", s.gradd.a11}, {"gradd12", s.gradd.a12},
                   {"gradd21", s.gradd.a21}, {"gradd22", s.gradd.a22}});
  }
  return {{"nx", g.nx}, {"ny", g.ny}, {"points", std::move(pts)}};
}

inline FieldGrid fieldgrid_from_json(const nlohmann::json& j)
{
  try {
    FieldGrid g;
    g.nx = j.at("nx").get<std::size_t>();
    g.ny = j.at("ny").get<std::size_t>();
    for (const auto& p : j.at("points")) {
      FieldSample s;
      s.X = {p.at("X").get<double>(), p.at("Y").get<double>()};
      s.u = {p.at("u_x").get<double>(), p.at("u_y").get<double>()};
      s.phi = p.at("phi").get<double>();
      s.F = {p.at("F11").get<double>(), p.at("F12").get<double>(), p.at("F21").get<double>(),
             p.at("F22").get<double>()};
      s.d = {p.at("d_x").get<double>(), p.at("d_y").get<double>()};
      s.gradd = {p.at("gradd11").get<double>(), p.at("gradd12").get<double>(), p.at("gradd21").get<double>(),
                 p.at("gradd22").get<double>()};
      g.samples.push_back(s);
    }
    if (g.samples.size() != g.nx * g.ny)
      throw IoError("field grid JSON: nx*ny does not match the number of points");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("field grid JSON: ") + e.what());
  }
}

enum class FieldFormat { csv, json };

inline void export_fieldgrid(const FieldGrid& g, FieldFormat fmt, const std::string& path)
{
  auto os = detail::open_for_write(path);
  if (fmt == FieldFormat::csv)
    write_fieldgrid_csv(g, os);
  else
    os << fieldgrid_to_json(g).dump(1) << '\n';
  if (!os)
    throw IoError("write failed for '" + path + "'");
}

inline FieldGrid import_fieldgrid(const std::string& path)
{
  auto is = detail::open_for_read(path);
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (json) {
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("field grid JSON: " + std::string(e.what()));
    }
    return fieldgrid_from_json(j);
  }
  return read_fieldgrid_csv(is);
}

} // namespace cosserat
