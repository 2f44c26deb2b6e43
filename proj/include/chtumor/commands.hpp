// commands.hpp
// Subcommand bodies behind the `chtumor` tool. Each returns the process exit
// code: 0 ok, 1 usage or I/O error, 2 certificate negative, 3 diverged.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chtumor/config.hpp"
#include "chtumor/diagnostics.hpp"
#include "chtumor/dynamics.hpp"
#include "chtumor/homogeneous.hpp"
#include "chtumor/io.hpp"
#include "chtumor/model.hpp"

namespace chtumor {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitCertNegative = 2, kExitDiverged = 3 };

namespace detail {

inline const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

inline std::string padded_step(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08zu", k);
  return buf;
}

}  // namespace detail

inline void print_cert(std::ostream& os, const DissipativityCert& c, const Proliferation& h) {
  using detail::verdict;
  auto num = [](double v) { return format_double(v); };
  os << "nutrient_decay   " << verdict(c.nutrient_decay) << "  h_star > 0 and B - C*h_star > 0"
     << "  (h_star = " << num(h.h_star()) << ", B - C*h_star = " << num(c.decay_margin) << ")\n";
  os << "nutrient_bound   " << verdict(c.nutrient_bound)
     << "  B*sigma_s/(B - C*h_star) < 1  (margin = " << num(c.bound_margin) << ")\n";
  os << "net_apoptosis    " << verdict(c.net_apoptosis)
     << "  A - P*B*sigma_s/(B - C*h_star) > 0  (margin = " << num(c.apoptosis_margin) << ")\n";
  os << "superquadratic   " << verdict(c.superquadratic)
     << "  beta coercive with p_beta > 2  (p_beta - 2 = " << num(c.growth_margin) << ")\n";
  os << "sigma_upper_limit = " << num(c.sigma_upper_limit) << '\n';
  os << "sigma_lower_limit = " << num(c.sigma_lower_limit) << '\n';
  if (c.dissipative()) {
    os << "epsilon_max = " << num(*c.epsilon_max) << '\n';
    os << "T1(epsilon_max) = " << num(*c.T1_at_epsilon_max) << '\n';
    os << "epsilon = " << num(*c.epsilon) << '\n';
    os << "T1 = " << num(*c.T1) << '\n';
  }
  if (!c.nutrient_decay) {
    if (h.h_star() == 0.0)
      os << "note: nutrient_decay fails because h_star = 0 (h never turns negative)\n";
    else
      os << "note: nutrient_decay fails because C*h_star >= B\n";
  }
  os << "verdict: " << (c.dissipative() ? "dissipative" : "not certified") << '\n';
}

inline int cmd_check_params(const RunConfig& cfg, std::ostream& os) {
  cfg.params.validate();
  const Proliferation h = cfg.proliferation();
  const Potential pot = cfg.potential.build();
  const auto cert = check_dissipativity(cfg.params, pot, h);
  print_cert(os, cert, h);
  os << "regime: " << to_string(classify_regime(cfg.params, h, pot).tag) << '\n';
  return cert.dissipative() ? kExitOk : kExitCertNegative;
}

inline void write_snapshots(const std::filesystem::path& dir, const SimState& s, std::size_t k) {
  const std::string suffix = "_" + detail::padded_step(k) + ".snap";
  write_snapshot(dir / ("phi" + suffix), s.phi, "phi", s.t);
  write_snapshot(dir / ("mu" + suffix), s.mu, "mu", s.t);
  write_snapshot(dir / ("sigma" + suffix), s.sigma, "sigma", s.t);
}

/// Writes series.csv, summary.txt and optional snapshots under cfg.out_dir.
inline int cmd_run(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const GridSpec grid = cfg.grid();
  const Potential pot = cfg.potential.build();
  const Proliferation h = cfg.proliferation();
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  const std::filesystem::path snapdir = out / "snapshots";
  if (cfg.snapshot_stride > 0) std::filesystem::create_directories(snapdir);

  const SimState initial = make_initial(grid, cfg.initial, pot);
  RunObserver observer;
  if (cfg.snapshot_stride > 0)
    observer = [&](const SimState& s, const MonitorRow&, std::size_t k) {
      if (k % cfg.snapshot_stride == 0) write_snapshots(snapdir, s, k);
    };
  const TrajectoryReport rep = run(initial, cfg.t_end, cfg.params, pot, h, cfg.scheme, observer);
  write_series_csv(out / "series.csv", rep.series);
  if (cfg.snapshot_stride > 0 && rep.steps % cfg.snapshot_stride != 0)
    write_snapshots(snapdir, rep.final_state, rep.steps);

  const SimState& f = rep.final_state;
  std::size_t violations = 0;
  for (const auto& row : rep.series) violations += row.violations;
  auto num = [](double v) { return format_double(v); };
  auto summary = open_output(out / "summary.txt");
  summary << "status: " << to_string(rep.status) << '\n';
  if (!rep.message.empty()) summary << "message: " << rep.message << '\n';
  summary << "steps: " << rep.steps << '\n'
          << "t_final: " << num(f.t) << '\n'
          << "phi_min: " << num(f.phi.min()) << '\n'
          << "phi_max: " << num(f.phi.max()) << '\n'
          << "phi_mean: " << num(mean(f.phi)) << '\n'
          << "sigma_min: " << num(f.sigma.min()) << '\n'
          << "sigma_max: " << num(f.sigma.max()) << '\n'
          << "sigma_mean: " << num(mean(f.sigma)) << '\n'
          << "energy: " << num(energy(f.phi, pot)) << '\n'
          << "x_magnitude: " << num(x_magnitude(f.phi, f.sigma, pot)) << '\n'
          << "envelope_violations: " << violations << '\n'
          << "regime: " << to_string(classify_regime(cfg.params, h, pot).tag) << '\n';
  if (cfg.radius) {
    const auto ab = absorption(rep.series, *cfg.radius);
    summary << "absorption_radius: " << num(ab.ball_radius_used) << '\n'
            << "absorbed: " << (ab.entered ? "yes" : "no") << '\n';
    if (ab.entered)
      summary << "entry_time: " << num(*ab.entry_time) << '\n'
              << "post_entry_max_magnitude: " << num(ab.post_entry_max_magnitude) << '\n';
  }
  if (!summary) throw std::runtime_error("write failed: summary.txt");

  log << "run " << to_string(rep.status) << " after " << rep.steps << " steps, t = " << num(f.t)
      << '\n';
  return rep.status == RunStatus::diverged || rep.status == RunStatus::failed ? kExitDiverged
                                                                               : kExitOk;
}

/// Homogeneous start state: domain means of the configured initial fields.
inline HomState homogeneous_start(const RunConfig& cfg) {
  const Potential pot = cfg.potential.build();
  const SimState s = make_initial(cfg.grid(), cfg.initial, pot);
  return {mean(s.phi), mean(s.sigma)};
}

/// Writes ode.csv (t,X,S) and regime.txt.
inline int cmd_ode(const RunConfig& cfg, std::ostream& log) {
  cfg.params.validate();
  const Potential pot = cfg.potential.build();
  const Proliferation h = cfg.proliferation();
  if (!(cfg.scheme.dt > 0.0)) throw ConfigError("scheme: dt must be positive");
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);

  const HomState start = homogeneous_start(cfg);
  const HomTrajectory traj = integrate(start, cfg.t_end, cfg.scheme.dt, cfg.params, h);
  {
    auto csv = open_output(out / "ode.csv");
    csv << "t,X,S\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i)
      csv << format_double(traj.t[i]) << ',' << format_double(traj.states[i].X) << ','
          << format_double(traj.states[i].S) << '\n';
    if (!csv) throw std::runtime_error("write failed: ode.csv");
  }
  const Regime regime = classify_regime(cfg.params, h, pot);
  auto txt = open_output(out / "regime.txt");
  txt << "regime: " << to_string(regime.tag) << '\n' << "explanation: " << regime.explanation << '\n';
  if (cfg.params.B - cfg.params.C * h.h_star() > 0.0) {
    const auto [lo, hi] = invariant_strip(cfg.params, h);
    txt << "strip_lower: " << format_double(lo) << '\n' << "strip_upper: " << format_double(hi) << '\n';
  } else {
    txt << "strip: none (B - C*h_star <= 0)\n";
  }
  for (const auto& e : equilibria(cfg.params, h))
    txt << "equilibrium: " << format_double(e.X) << ' ' << format_double(e.S) << '\n';
  txt << "diverged: " << (traj.diverged ? "yes" : "no") << '\n';
  log << "ode " << (traj.diverged ? "diverged" : "completed") << " at t = "
      << format_double(traj.t.back()) << ", regime " << to_string(regime.tag) << '\n';
  return traj.diverged ? kExitDiverged : kExitOk;
}

struct SweepRow {
  std::vector<double> values;
  std::string regime;
  DissipativityCert cert;
  std::string diverged = "na";
  std::string error;
};

inline SweepRow sweep_point(const SweepConfig& sweep, const std::vector<double>& values,
                            std::size_t index) {
  SweepRow row;
  row.values = values;
  try {
    RunConfig cfg = sweep.base;
    for (std::size_t a = 0; a < sweep.axes.size(); ++a)
      set_parameter(cfg, sweep.axes[a].name, values[a]);
    cfg.params.validate();
    const Potential pot = cfg.potential.build();
    const Proliferation h = cfg.proliferation();
    row.cert = check_dissipativity(cfg.params, pot, h);
    row.regime = to_string(classify_regime(cfg.params, h, pot).tag);
    if (sweep.action == SweepAction::ode_trajectory) {
      const auto traj = integrate(homogeneous_start(cfg), cfg.t_end, cfg.scheme.dt, cfg.params, h);
      row.diverged = traj.diverged ? "1" : "0";
    } else if (sweep.action == SweepAction::pde_run) {
      cfg.out_dir = (std::filesystem::path(sweep.base.out_dir) /
                     ("point_" + detail::padded_step(index)))
                        .string();
      std::ostringstream sink;
      row.diverged = cmd_run(cfg, sink) == kExitDiverged ? "1" : "0";
    }
  } catch (const std::exception& e) {
    row.regime = "error";
    row.error = e.what();
    std::replace(row.error.begin(), row.error.end(), ',', ';');
    std::replace(row.error.begin(), row.error.end(), '\n', ' ');
  }
  return row;
}

/// Evaluates every grid point (axis1-major order) and writes regime_map.csv.
inline int cmd_sweep(const SweepConfig& sweep, unsigned threads, std::ostream& log) {
  std::vector<std::vector<double>> points;
  const auto& ax = sweep.axes;
  for (std::size_t i = 0; i < ax[0].count; ++i) {
    if (ax.size() == 1) {
      points.push_back({ax[0].value(i)});
      continue;
    }
    for (std::size_t j = 0; j < ax[1].count; ++j) points.push_back({ax[0].value(i), ax[1].value(j)});
  }
  const std::filesystem::path out(sweep.base.out_dir);
  std::filesystem::create_directories(out);

  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();)
      rows[i] = sweep_point(sweep, points[i], i);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(points.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }

  auto csv = open_output(out / "regime_map.csv");
  csv << "index";
  for (const auto& a : ax) csv << ',' << a.name;
  csv << ",regime,nutrient_decay,nutrient_bound,net_apoptosis,superquadratic,diverged,error\n";
  std::size_t errors = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv << i;
    for (double v : r.values) csv << ',' << format_double(v);
    csv << ',' << r.regime << ',' << r.cert.nutrient_decay << ',' << r.cert.nutrient_bound << ','
        << r.cert.net_apoptosis << ',' << r.cert.superquadratic << ',' << r.diverged << ','
        << r.error << '\n';
    errors += !r.error.empty();
  }
  if (!csv) throw std::runtime_error("write failed: regime_map.csv");
  log << "sweep evaluated " << rows.size() << " points (" << errors << " with errors)\n";
  return kExitOk;
}

}  // namespace chtumor
