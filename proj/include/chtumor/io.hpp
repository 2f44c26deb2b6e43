// io.hpp
// Locale-independent number formatting, CSV emission and field snapshots.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chtumor/diagnostics.hpp"
#include "chtumor/errors.hpp"
#include "chtumor/grid.hpp"

namespace chtumor {

/// Shortest-free, 17-significant-digit rendering ("nan"/"inf" for non-finite).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s == "nan") {
    out = std::nan("");
    return true;
  }
  if (s == "inf") {
    out = INFINITY;
    return true;
  }
  if (s == "-inf") {
    out = -INFINITY;
    return true;
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

inline constexpr std::string_view kSeriesHeader =
    "t,energy,x_magnitude,mass,sigma_min,sigma_max,grad_mu_sq,lap_phi_sq,env_lower,env_upper,"
    "violations";

inline void write_series_row(std::ostream& os, const MonitorRow& r) {
  os << format_double(r.t) << ',' << format_double(r.energy) << ','
     << format_double(r.x_magnitude) << ',' << format_double(r.mass) << ','
     << format_double(r.sigma_min) << ',' << format_double(r.sigma_max) << ','
     << format_double(r.grad_mu_sq) << ',' << format_double(r.lap_phi_sq) << ','
     << format_double(r.env_lower) << ',' << format_double(r.env_upper) << ',' << r.violations
     << '\n';
}

inline void write_series_csv(const std::filesystem::path& path, std::span<const MonitorRow> rows) {
  auto f = open_output(path);
  f << kSeriesHeader << '\n';
  for (const auto& r : rows) write_series_row(f, r);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr std::string_view kSnapshotMagic = "CHTUMOR-SNAPSHOT 1";

struct Snapshot {
  std::string name;
  double t = 0.0;
  Field field;
};

/// Text header (magic, field name, dim, cells, lengths, time), then one value per line.
inline void write_snapshot(const std::filesystem::path& path, const Field& f,
                           std::string_view name, double t) {
  auto os = open_output(path);
  const GridSpec& g = f.grid();
  os << kSnapshotMagic << '\n' << "field " << name << '\n' << "dim " << g.dim << '\n' << "cells";
  for (int a = 0; a < g.dim; ++a) os << ' ' << g.cells[a];
  os << '\n' << "lengths";
  for (int a = 0; a < g.dim; ++a) os << ' ' << format_double(g.lengths[a]);
  os << '\n' << "time " << format_double(t) << '\n';
  for (double v : f.values()) os << format_double(v) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open snapshot " + path.string());
  auto fail = [&](const std::string& what) {
    throw ConfigError("snapshot " + path.string() + ": " + what);
  };
  std::string line;
  if (!std::getline(is, line) || line != kSnapshotMagic) fail("bad magic line");

  auto words = [](const std::string& l) {
    std::vector<std::string> w;
    std::size_t i = 0;
    while (i < l.size()) {
      while (i < l.size() && l[i] == ' ') ++i;
      std::size_t j = i;
      while (j < l.size() && l[j] != ' ') ++j;
      if (j > i) w.emplace_back(l.substr(i, j - i));
      i = j;
    }
    return w;
  };
  auto keyed = [&](std::string_view key) {
    if (!std::getline(is, line)) fail("truncated header");
    auto w = words(line);
    if (w.empty() || w[0] != key) fail("expected '" + std::string(key) + "'");
    w.erase(w.begin());
    return w;
  };

  Snapshot snap;
  auto name = keyed("field");
  if (name.size() != 1) fail("bad field line");
  snap.name = name[0];
  auto dimw = keyed("dim");
  int dim = 0;
  if (dimw.size() != 1 || !parse_int(dimw[0], dim) || dim < 1 || dim > 3) fail("bad dim");
  auto cw = keyed("cells");
  auto lw = keyed("lengths");
  if (cw.size() != static_cast<std::size_t>(dim) || lw.size() != cw.size()) fail("bad extents");
  std::vector<int> cells(dim);
  std::vector<double> lengths(dim);
  for (int a = 0; a < dim; ++a)
    if (!parse_int(cw[a], cells[a]) || !parse_double(lw[a], lengths[a])) fail("bad extents");
  auto tw = keyed("time");
  if (tw.size() != 1 || !parse_double(tw[0], snap.t)) fail("bad time");

  const GridSpec g = GridSpec::make(cells, lengths);
  std::vector<double> values;
  values.reserve(g.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double v;
    if (!parse_double(line, v)) fail("bad value '" + line + "'");
    values.push_back(v);
  }
  if (values.size() != g.size()) fail("value count does not match the grid");
  snap.field = Field(g, std::move(values));
  return snap;
}

}  // namespace chtumor
