// dynamics.hpp
// Linearly implicit, stabilized time stepping for the coupled
// Cahn-Hilliard / nutrient system with no-flux boundaries:
//
//   φ_t − Δμ = (Pσ − A) h(φ),   μ = −Δφ + ψ'(φ),
//   σ_t − Δσ = −Cσ h(φ) + B(σ_s − σ).
//
// Each step updates σ first (decay implicit, growth from h < 0 explicit),
// then φ with an implicit biharmonic plus stabilization and explicit ψ'.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "chtumor/diagnostics.hpp"
#include "chtumor/errors.hpp"
#include "chtumor/grid.hpp"
#include "chtumor/model.hpp"

namespace chtumor {

struct SimState {
  double t = 0.0;
  Field phi;
  Field mu;
  Field sigma;

  const GridSpec& grid() const { return phi.grid(); }
  bool finite() const { return phi.finite() && mu.finite() && sigma.finite(); }
};

enum class LinearSolver { spectral, cg };

struct SchemeConfig {
  double dt = 1e-3;
  std::optional<double> stabilization;  // empty: automatic
  double linear_tol = 1e-8;
  std::size_t max_steps = 100'000'000;
  std::size_t monitor_stride = 1;
  LinearSolver solver = LinearSolver::spectral;
  double envelope_tol = 1e-3;
  double divergence_threshold = 1e6;

  bool operator==(const SchemeConfig&) const = default;
};

/// Raised when a step produces non-finite values; carries the last good state.
class NumericalBreakdown : public std::runtime_error {
 public:
  NumericalBreakdown(const std::string& what, SimState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const SimState& last_good() const { return last_good_; }

 private:
  SimState last_good_;
};

inline void validate_scheme(const SchemeConfig& cfg, const Params& params,
                            const Proliferation& prolif) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("scheme: dt must be positive");
  if (cfg.stabilization && !(*cfg.stabilization >= 0.0))
    throw ConfigError("scheme: stabilization must be nonnegative");
  if (!(cfg.linear_tol > 0.0 && cfg.linear_tol < 1.0))
    throw ConfigError("scheme: linear_tol must lie in (0, 1)");
  if (cfg.max_steps == 0) throw ConfigError("scheme: max_steps must be positive");
  if (cfg.monitor_stride == 0) throw ConfigError("scheme: monitor_stride must be positive");
  if (!(cfg.dt * params.C * prolif.h_star() < 1.0))
    throw ConfigError("scheme: dt*C*h_star must be < 1 to keep the nutrient nonnegative");
}

struct StepInfo {
  double stabilization = 0.0;
  std::size_t sigma_iterations = 0;
  std::size_t phi_iterations = 0;
  // root-mean-square of the φ right-hand side
  double phi_rhs_rms = 0.0;
};

/// Stabilization used by the step: the explicit value, or half the largest
/// ψ'' over the current range of φ.
inline double stabilization_for(const Field& phi, const Potential& pot, const SchemeConfig& cfg) {
  if (cfg.stabilization) return *cfg.stabilization;
  return std::max(0.0, 0.5 * pot.max_curvature(phi.min(), phi.max()));
}

/// Holds the grid-dependent solver data so repeated steps reuse it.
class Stepper {
 public:
  Stepper(const GridSpec& grid, Params params, Potential pot, Proliferation prolif,
          SchemeConfig cfg)
      : grid_(grid),
        params_(params),
        pot_(std::move(pot)),
        prolif_(prolif),
        cfg_(cfg) {
    validate_scheme(cfg_, params_, prolif_);
    if (cfg_.solver == LinearSolver::spectral) basis_.emplace(grid_);
  }

  const SchemeConfig& config() const { return cfg_; }

  SimState step(const SimState& s, StepInfo* info = nullptr) const {
    if (!(s.grid() == grid_)) throw std::invalid_argument("step: state grid mismatch");
    const double dt = cfg_.dt;
    const std::size_t n = grid_.size();
    StepInfo local;

    // nutrient: (1 + dt(B + C h⁺) − dt Δ) σ' = σ + dt B σ_s + dt C h⁻ σ
    Field h_old = s.phi.map([&](double r) { return prolif_.h(r); });
    Field a(grid_), rhs(grid_);
    bool uniform = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double hp = std::max(h_old[i], 0.0);
      const double hm = std::max(-h_old[i], 0.0);
      a[i] = 1.0 + dt * (params_.B + params_.C * hp);
      rhs[i] = s.sigma[i] + dt * params_.B * params_.sigma_s + dt * params_.C * hm * s.sigma[i];
      uniform = uniform && a[i] == a[0];
    }
    SimState next;
    next.t = s.t + dt;
    if (basis_ && uniform) {
      next.sigma = solve_helmholtz_spectral(*basis_, a[0], dt, rhs);
    } else {
      SolveStats st;
      next.sigma = solve_helmholtz(a, dt, rhs, cfg_.linear_tol, &st);
      local.sigma_iterations = st.iterations;
    }

    // phase: (I + dt s(−Δ) + dt Δ²) φ' = φ + dt Δ(ψ'(φ) − sφ) + dt (Pσ' − A) h(φ)
    const double stab = stabilization_for(s.phi, pot_, cfg_);
    local.stabilization = stab;
    Field psi_p = s.phi.map([&](double r) { return pot_.psi_prime(r); });
    Field explicit_part(grid_);
    for (std::size_t i = 0; i < n; ++i) explicit_part[i] = psi_p[i] - stab * s.phi[i];
    const Field lap_explicit = laplacian_neumann(explicit_part);
    Field phi_rhs(grid_);
    for (std::size_t i = 0; i < n; ++i)
      phi_rhs[i] = s.phi[i] + dt * lap_explicit[i] +
                   dt * (params_.P * next.sigma[i] - params_.A) * h_old[i];
    local.phi_rhs_rms = l2_norm(phi_rhs) / std::sqrt(grid_.volume());
    if (basis_) {
      next.phi = solve_ch_linear_spectral(*basis_, dt, stab, phi_rhs);
    } else {
      SolveStats st;
      next.phi = solve_ch_linear(dt, stab, phi_rhs, cfg_.linear_tol, &st);
      local.phi_iterations = st.iterations;
    }

    // μ' = −Δφ' + s(φ' − φ) + ψ'(φ)
    const Field lap_phi = laplacian_neumann(next.phi);
    next.mu = Field(grid_);
    for (std::size_t i = 0; i < n; ++i)
      next.mu[i] = -lap_phi[i] + stab * (next.phi[i] - s.phi[i]) + psi_p[i];

    if (!next.finite()) {
      std::ostringstream msg;
      msg << "non-finite values after step to t = " << next.t;
      throw NumericalBreakdown(msg.str(), s);
    }
    if (info) *info = local;
    return next;
  }

 private:
  GridSpec grid_;
  Params params_;
  Potential pot_;
  Proliferation prolif_;
  SchemeConfig cfg_;
  std::optional<NeumannBasis> basis_;
};

/// Single step of size cfg.dt.
inline SimState step(const SimState& state, const Params& params, const Potential& pot,
                     const Proliferation& prolif, const SchemeConfig& cfg,
                     StepInfo* info = nullptr) {
  return Stepper(state.grid(), params, pot, prolif, cfg).step(state, info);
}

enum class RunStatus { completed, truncated, diverged, failed };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::truncated: return "truncated";
    case RunStatus::diverged: return "diverged";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

struct TrajectoryReport {
  SimState final_state;
  std::vector<MonitorRow> series;
  RunStatus status = RunStatus::completed;
  std::size_t steps = 0;
  std::string message;
};

/// Called with each monitored state (after its row is appended) and the step index.
using RunObserver = std::function<void(const SimState&, const MonitorRow&, std::size_t)>;

/// Steps from `initial` until t_end (or max_steps), appending a diagnostics
/// row at t0, every monitor_stride steps and at the final state.
inline TrajectoryReport run(const SimState& initial, double t_end, const Params& params,
                            const Potential& pot, const Proliferation& prolif,
                            const SchemeConfig& cfg, const RunObserver& observer = {}) {
  if (!(t_end >= initial.t)) throw ConfigError("run: t_end must not precede the initial time");
  Stepper stepper(initial.grid(), params, pot, prolif, cfg);
  TrajectoryReport rep;
  auto record = [&](const SimState& s, std::size_t k) {
    rep.series.push_back(
        monitor_row(s.t, s.phi, s.mu, s.sigma, params, pot, prolif, cfg.envelope_tol));
    if (observer) observer(s, rep.series.back(), k);
  };

  const double span = (t_end - initial.t) / cfg.dt;
  std::size_t wanted = span > 0.0 ? static_cast<std::size_t>(std::ceil(span - 1e-9)) : 0;
  if (wanted > cfg.max_steps) {
    wanted = cfg.max_steps;
    rep.status = RunStatus::truncated;
  }

  SimState cur = initial;
  record(cur, 0);
  std::size_t k = 0;
  try {
    while (k < wanted) {
      SimState next = stepper.step(cur);
      ++k;
      next.t = initial.t + static_cast<double>(k) * cfg.dt;
      cur = std::move(next);
      if (cur.phi.max_abs() > cfg.divergence_threshold) {
        rep.status = RunStatus::diverged;
        std::ostringstream msg;
        msg << "max |phi| exceeded " << cfg.divergence_threshold << " at t = " << cur.t;
        rep.message = msg.str();
        record(cur, k);
        break;
      }
      if (k % cfg.monitor_stride == 0 || k == wanted) record(cur, k);
    }
  } catch (const NumericalBreakdown& e) {
    rep.status = RunStatus::failed;
    rep.message = e.what();
  } catch (const SolverError& e) {
    rep.status = RunStatus::failed;
    rep.message = e.what();
  }
  rep.steps = k;
  rep.final_state = std::move(cur);
  return rep;
}

// ---------------------------------------------------------------------------
// Initial conditions

struct ConstantInitial {
  double phi0 = -1.0;
  double sigma0 = 0.5;
  bool operator==(const ConstantInitial&) const = default;
};

/// φ = tanh((x_axis − position·L)/(√2·width)), σ ≡ sigma0.
struct TanhInitial {
  double width = 0.1;
  int axis = 0;
  double position = 0.5;  // fraction of the axis length
  double sigma0 = 0.5;
  bool operator==(const TanhInitial&) const = default;
};

/// Uniform noise around a mean for both φ and σ; σ is clamped to [0, 1].
struct RandomInitial {
  double phi_mean = 0.0;
  double phi_amplitude = 0.1;
  double sigma_mean = 0.5;
  double sigma_amplitude = 0.0;
  std::uint64_t seed = 42;
  bool operator==(const RandomInitial&) const = default;
};

using InitialKind = std::variant<ConstantInitial, TanhInitial, RandomInitial>;

/// μ = −Δ_h φ + ψ'(φ).
inline Field chemical_potential(const Field& phi, const Potential& pot) {
  const Field lap = laplacian_neumann(phi);
  Field mu(phi.grid());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = -lap[i] + pot.psi_prime(phi[i]);
  return mu;
}

inline SimState make_state(Field phi, Field sigma, const Potential& pot, double t = 0.0) {
  detail::require_same_grid(phi, sigma);
  SimState s;
  s.t = t;
  s.mu = chemical_potential(phi, pot);
  s.phi = std::move(phi);
  s.sigma = std::move(sigma);
  return s;
}

namespace detail {

// 53-bit draw in [0, 1); std::mt19937_64 output is fixed by the standard,
// the distributions are not
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void require_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ConfigError(std::string("initial: ") + what + " must lie in [0, 1]");
}

}  // namespace detail

inline SimState make_initial(const GridSpec& grid, const InitialKind& kind, const Potential& pot) {
  Field phi(grid), sigma(grid);
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantInitial>) {
          detail::require_unit_interval(k.sigma0, "sigma0");
          if (!std::isfinite(k.phi0)) throw ConfigError("initial: phi0 must be finite");
          phi = Field(grid, k.phi0);
          sigma = Field(grid, k.sigma0);
        } else if constexpr (std::is_same_v<K, TanhInitial>) {
          detail::require_unit_interval(k.sigma0, "sigma0");
          if (k.axis < 0 || k.axis >= grid.dim) throw ConfigError("initial: axis out of range");
          if (!(k.width > 0.0)) throw ConfigError("initial: width must be positive");
          const auto l = grid.layout(k.axis);
          const double x0 = k.position * grid.lengths[k.axis];
          for (std::size_t o = 0; o < l.outer; ++o)
            for (std::size_t j = 0; j < l.n; ++j)
              for (std::size_t i = 0; i < l.inner; ++i)
                phi[(o * l.n + j) * l.inner + i] =
                    std::tanh((grid.center(k.axis, j) - x0) / (std::sqrt(2.0) * k.width));
          sigma = Field(grid, k.sigma0);
        } else {
          detail::require_unit_interval(k.sigma_mean, "sigma_mean");
          std::mt19937_64 rng(k.seed);
          for (std::size_t i = 0; i < phi.size(); ++i)
            phi[i] = k.phi_mean + k.phi_amplitude * (2.0 * detail::unit_draw(rng) - 1.0);
          for (std::size_t i = 0; i < sigma.size(); ++i)
            sigma[i] = std::clamp(
                k.sigma_mean + k.sigma_amplitude * (2.0 * detail::unit_draw(rng) - 1.0), 0.0,
                1.0);
        }
      },
      kind);
  return make_state(std::move(phi), std::move(sigma), pot);
}

}  // namespace chtumor
