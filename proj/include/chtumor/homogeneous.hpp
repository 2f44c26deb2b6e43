// homogeneous.hpp
// Spatially homogeneous reduction
//
//   X' = −(A − P S) h(X),   S' = −C S h(X) − B (S − σ_s),
//
// with a fixed-step RK4 integrator, the positively invariant nutrient strip,
// equilibria and the regime classifier.

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "chtumor/errors.hpp"
#include "chtumor/model.hpp"

namespace chtumor {

struct HomState {
  double X = 0.0;
  double S = 0.0;
  bool operator==(const HomState&) const = default;
};

inline std::pair<double, double> hom_rhs(const HomState& s, const Params& p,
                                         const Proliferation& h) {
  const double hx = h(s.X);
  return {-(p.A - p.P * s.S) * hx, -p.C * s.S * hx - p.B * (s.S - p.sigma_s)};
}

struct HomTrajectory {
  std::vector<double> t;
  std::vector<HomState> states;
  bool diverged = false;
};

/// Classical RK4 with fixed step. Stops early once |X| or |S| exceeds 1e9.
inline HomTrajectory integrate(const HomState& initial, double t_end, double dt,
                               const Params& p, const Proliferation& h,
                               double t0 = 0.0) {
  if (!(dt > 0.0)) throw ConfigError("integrate: dt must be positive");
  if (!(t_end >= t0)) throw ConfigError("integrate: t_end precedes the start time");
  constexpr double kDivergence = 1e9;
  const double span = (t_end - t0) / dt;
  const auto steps = static_cast<std::size_t>(std::ceil(span - 1e-9));

  HomTrajectory traj;
  traj.t.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.t.push_back(t0);
  traj.states.push_back(initial);

  auto f = [&](double X, double S) { return hom_rhs({X, S}, p, h); };
  HomState y = initial;
  for (std::size_t k = 1; k <= steps; ++k) {
    const auto [k1x, k1s] = f(y.X, y.S);
    const auto [k2x, k2s] = f(y.X + 0.5 * dt * k1x, y.S + 0.5 * dt * k1s);
    const auto [k3x, k3s] = f(y.X + 0.5 * dt * k2x, y.S + 0.5 * dt * k2s);
    const auto [k4x, k4s] = f(y.X + dt * k3x, y.S + dt * k3s);
    y.X += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    y.S += dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    traj.t.push_back(t0 + static_cast<double>(k) * dt);
    traj.states.push_back(y);
    if (!(std::abs(y.X) <= kDivergence && std::abs(y.S) <= kDivergence)) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

/// Nutrient band [Bσ_s/(B + C), Bσ_s/(B − C·h_star)] that homogeneous
/// trajectories cannot leave.
inline std::pair<double, double> invariant_strip(const Params& p, const Proliferation& h) {
  if (!(p.B - p.C * h.h_star() > 0.0))
    throw DomainError("invariant_strip: requires B - C*h_star > 0");
  return {sigma_lower_limit(p), sigma_upper_limit(p, h)};
}

/// Fixed points: (−1, σ_s) plus the S = A/P branch where h(X) = B(σ_s − A/P)/(C·A/P),
/// located by a sign-change scan of X over [phi_star − 2, 3].
inline std::vector<HomState> equilibria(const Params& p, const Proliferation& h) {
  std::vector<HomState> out{{-1.0, p.sigma_s}};
  const double S = p.A / p.P;
  const double target = p.B * (p.sigma_s - S) / (p.C * S);
  auto g = [&](double X) { return h(X) - target; };
  const double lo = h.phi_star() - 2.0, hi = 3.0;
  constexpr int kSamples = 4000;
  double x_prev = lo, g_prev = g(lo);
  for (int i = 1; i <= kSamples; ++i) {
    const double x = lo + (hi - lo) * i / kSamples;
    const double gx = g(x);
    if (g_prev == 0.0 || (g_prev < 0.0) != (gx < 0.0)) {
      double a = x_prev, b = x;
      if (g_prev != 0.0) {
        for (int it = 0; it < 100; ++it) {
          const double m = 0.5 * (a + b);
          ((g(m) < 0.0) == (g_prev < 0.0) ? a : b) = m;
        }
      }
      const double root = g_prev == 0.0 ? x_prev : 0.5 * (a + b);
      if (std::abs(root + 1.0) > 1e-9 || std::abs(S - p.sigma_s) > 1e-12)
        out.push_back({root, S});
      break;  // h is monotone: one crossing unless the target sits on a plateau
    }
    x_prev = x;
    g_prev = gx;
  }
  return out;
}

enum class RegimeTag { dissipative, frozen_mass, blowup, growth_locked, indeterminate };

inline std::string to_string(RegimeTag t) {
  switch (t) {
    case RegimeTag::dissipative: return "dissipative";
    case RegimeTag::frozen_mass: return "frozen_mass";
    case RegimeTag::blowup: return "blowup";
    case RegimeTag::growth_locked: return "growth_locked";
    case RegimeTag::indeterminate: return "indeterminate";
  }
  return "?";
}

struct Regime {
  RegimeTag tag = RegimeTag::indeterminate;
  std::string explanation;
};

inline Regime classify_regime(const Params& p, const Proliferation& h, const Potential& pot) {
  if (h.h_star() == 0.0)
    return {RegimeTag::frozen_mass,
            "h_star = 0: h vanishes below -1, so a homogeneous X < -1 never moves and no "
            "bounded absorbing set can be expected"};
  if (p.C * h.h_star() >= p.B)
    return {RegimeTag::blowup,
            "C*h_star >= B: from X << 0 with PS > A both |X| and S grow without bound"};
  const double lower = sigma_lower_limit(p);
  const double upper = sigma_upper_limit(p, h);
  const double ratio = p.A / p.P;
  if (ratio <= lower)
    return {RegimeTag::growth_locked,
            "A/P <= B*sigma_s/(B+C): inside the invariant strip X' > 0 for X >= 1, so X "
            "grows forever"};
  const auto cert = check_dissipativity(p, pot, h);
  if (cert.dissipative())
    return {RegimeTag::dissipative,
            "all dissipativity conditions hold: the strip is invariant and X' < 0 on its "
            "intersection with X > 1"};
  if (ratio <= upper)
    return {RegimeTag::indeterminate,
            "A/P lies in (B*sigma_s/(B+C), B*sigma_s/(B-C*h_star)]: X' changes sign across "
            "the strip"};
  if (!cert.nutrient_bound)
    return {RegimeTag::indeterminate,
            "B*sigma_s/(B-C*h_star) >= 1: the strip leaves the physical range [0, 1]"};
  return {RegimeTag::indeterminate,
          "the potential is not superquadratic: the homogeneous picture is favourable but "
          "the phase equation is not controlled"};
}

}  // namespace chtumor
