// diagnostics.hpp
// Energy, phase-space magnitude, nutrient envelope checks and absorbing-ball
// detection over monitored trajectories.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "chtumor/grid.hpp"
#include "chtumor/model.hpp"

namespace chtumor {

/// ∫|ψ(φ)| over the domain.
inline double potential_integral(const Field& phi, const Potential& pot) {
  double s = 0.0;
  for (double v : phi.values()) s += std::abs(pot.psi(v));
  return s * phi.grid().cell_volume();
}

/// Interfacial plus configurational energy ½‖∇φ‖² + ∫ψ(φ).
inline double energy(const Field& phi, const Potential& pot) {
  double s = 0.0;
  for (double v : phi.values()) s += pot.psi(v);
  return 0.5 * grad_sq_norm(phi) + s * phi.grid().cell_volume();
}

/// ‖φ‖_V + ‖σ‖_∞ + ‖ψ(φ)‖_{L¹}, with ‖φ‖_V² = ‖φ‖² + ‖∇φ‖².
inline double x_magnitude(const Field& phi, const Field& sigma, const Potential& pot) {
  detail::require_same_grid(phi, sigma);
  const double v_norm = std::sqrt(inner(phi, phi) + grad_sq_norm(phi));
  return v_norm + sigma.max_abs() + potential_integral(phi, pot);
}

/// Number of cells with σ outside [S₋(t) − tol, S₊(t) + tol]. The upper
/// envelope is only checked where it exists (B − C·h_star > 0).
inline std::size_t check_sigma_envelope(const Field& sigma, double t, const Params& params,
                                        const Proliferation& prolif, double tol) {
  const double lo = envelope_lower(params, t) - tol;
  const bool has_upper = params.B - params.C * prolif.h_star() > 0.0;
  const double hi = has_upper ? envelope_upper(params, prolif, t) + tol
                              : std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  for (double v : sigma.values())
    if (v < lo || v > hi) ++count;
  return count;
}

/// One row of the monitored time series; column order is the CSV contract.
struct MonitorRow {
  double t = 0.0;
  double energy = 0.0;
  double x_magnitude = 0.0;
  double mass = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double grad_mu_sq = 0.0;
  double lap_phi_sq = 0.0;
  double env_lower = 0.0;
  double env_upper = 0.0;  // NaN when the upper envelope does not exist
  std::size_t violations = 0;
};

inline MonitorRow monitor_row(double t, const Field& phi, const Field& mu, const Field& sigma,
                              const Params& params, const Potential& pot,
                              const Proliferation& prolif, double envelope_tol) {
  MonitorRow row;
  row.t = t;
  row.energy = energy(phi, pot);
  row.x_magnitude = x_magnitude(phi, sigma, pot);
  row.mass = mean(phi);
  row.sigma_min = sigma.min();
  row.sigma_max = sigma.max();
  row.grad_mu_sq = grad_sq_norm(mu);
  const Field lap = laplacian_neumann(phi);
  row.lap_phi_sq = inner(lap, lap);
  row.env_lower = envelope_lower(params, t);
  row.env_upper = params.B - params.C * prolif.h_star() > 0.0
                      ? envelope_upper(params, prolif, t)
                      : std::numeric_limits<double>::quiet_NaN();
  row.violations = check_sigma_envelope(sigma, t, params, prolif, envelope_tol);
  return row;
}

struct AbsorptionReport {
  bool entered = false;
  std::optional<double> entry_time;
  double ball_radius_used = 0.0;
  // max magnitude from the entry row on; NaN if not entered
  double post_entry_max_magnitude = std::numeric_limits<double>::quiet_NaN();
};

/// First time after which x_magnitude stays within `radius` for the rest of the series.
inline AbsorptionReport absorption(std::span<const MonitorRow> series, double radius) {
  if (series.empty()) throw std::invalid_argument("absorption: empty series");
  AbsorptionReport rep;
  rep.ball_radius_used = radius;
  std::size_t first_inside = series.size();
  for (std::size_t k = series.size(); k-- > 0;) {
    if (!(series[k].x_magnitude <= radius)) break;
    first_inside = k;
  }
  if (first_inside < series.size()) {
    rep.entered = true;
    rep.entry_time = series[first_inside].t;
    double m = 0.0;
    for (std::size_t k = first_inside; k < series.size(); ++k)
      m = std::max(m, series[k].x_magnitude);
    rep.post_entry_max_magnitude = m;
  }
  return rep;
}

}  // namespace chtumor
