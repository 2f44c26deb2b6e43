// model.hpp
// Model constants, configuration potentials, the proliferation switch h, the
// dissipativity certificate and the nutrient comparison envelopes.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "chtumor/errors.hpp"

namespace chtumor {

/// Proliferation P, apoptosis A, nutrient supply B, consumption C, and the
/// vasculature nutrient level sigma_s.
struct Params {
  double P = 1.0;
  double A = 1.0;
  double B = 1.0;
  double C = 0.5;
  double sigma_s = 0.5;

  void validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(P) || !positive(A) || !positive(B) || !positive(C))
      throw ConfigError("params: P, A, B, C must be positive and finite");
    if (!(sigma_s > 0.0 && sigma_s < 1.0))
      throw ConfigError("params: sigma_s must lie in (0, 1)");
  }

  bool operator==(const Params&) const = default;
};

enum class PotentialKind { quartic, piecewise_demo, custom };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::quartic: return "quartic";
    case PotentialKind::piecewise_demo: return "demo";
    case PotentialKind::custom: return "polynomial";
  }
  return "?";
}

/// Configuration potential ψ with ψ' = β − λ·id, β monotone, β(0) = 0.
/// The coercivity metadata describes β(r)·sign(r) ≥ κ_β|r|^p_β − C_β and the
/// growth constant c_β bounds |β| ≤ c_β(1 + ψ).
struct Potential {
  using Fn = std::function<double(double)>;

  PotentialKind kind = PotentialKind::quartic;
  double lambda = 0.0;
  Fn psi, psi_prime, psi_second, beta, beta_hat;
  /// Upper bound of ψ'' over [lo, hi].
  std::function<double(double, double)> max_curvature;
  double p_beta = 0.0;
  double kappa_beta = 0.0;
  double C_beta = 0.0;
  double c_beta = 0.0;
  double ell = 0.0;  // liminf ψ(r)/|r|; +inf for superlinear growth
  std::vector<double> beta_coeffs;  // odd-power coefficients, custom kind only
};

/// ψ(r) = ¼(r² − 1)².
inline Potential make_quartic_potential() {
  Potential p;
  p.kind = PotentialKind::quartic;
  p.lambda = 1.0;
  p.psi = [](double r) {
    const double q = r * r - 1.0;
    return 0.25 * q * q;
  };
  p.psi_prime = [](double r) { return r * r * r - r; };
  p.psi_second = [](double r) { return 3.0 * r * r - 1.0; };
  p.beta = [](double r) { return r * r * r; };
  p.beta_hat = [](double r) { return 0.25 * r * r * r * r; };
  p.max_curvature = [](double lo, double hi) {
    const double m = std::max(std::abs(lo), std::abs(hi));
    return 3.0 * m * m - 1.0;
  };
  p.p_beta = 3.0;
  p.kappa_beta = 1.0;
  p.C_beta = 0.0;
  p.c_beta = 3.0;
  p.ell = std::numeric_limits<double>::infinity();
  return p;
}

/// Piecewise potential with linear growth: ½ − r² near zero, (r ∓ 1)² on the
/// shoulders, 2|r| − 3 beyond |r| = 2. Valid with λ = 2 (monotone β, β(0) = 0)
/// but not superquadratic.
inline Potential make_demo_potential() {
  Potential p;
  p.kind = PotentialKind::piecewise_demo;
  p.lambda = 2.0;
  p.psi = [](double r) {
    const double a = std::abs(r);
    if (a <= 0.5) return 0.5 - r * r;
    if (a >= 2.0) return 2.0 * a - 3.0;
    return r > 0 ? (r - 1.0) * (r - 1.0) : (r + 1.0) * (r + 1.0);
  };
  p.psi_prime = [](double r) {
    const double a = std::abs(r);
    if (a <= 0.5) return -2.0 * r;
    if (a >= 2.0) return r > 0 ? 2.0 : -2.0;
    return r > 0 ? 2.0 * (r - 1.0) : 2.0 * (r + 1.0);
  };
  p.psi_second = [](double r) {
    const double a = std::abs(r);
    if (a < 0.5) return -2.0;
    if (a < 2.0) return 2.0;
    return 0.0;
  };
  p.beta = [](double r) {
    const double a = std::abs(r);
    if (a <= 0.5) return 0.0;
    if (a >= 2.0) return r > 0 ? 2.0 * r + 2.0 : 2.0 * r - 2.0;
    return r > 0 ? 4.0 * r - 2.0 : 4.0 * r + 2.0;
  };
  p.beta_hat = [](double r) {
    const double a = std::abs(r);
    if (a <= 0.5) return 0.0;
    if (a >= 2.0) return a * a + 2.0 * a - 3.5;
    return 2.0 * (a - 0.5) * (a - 0.5);
  };
  p.max_curvature = [](double lo, double hi) {
    // ψ'' is −2 on [−½,½], 2 on the shoulders, 0 beyond |r| = 2
    double m = -std::numeric_limits<double>::infinity();
    if (lo <= 0.5 && hi >= -0.5) m = -2.0;
    if (lo <= -2.0 || hi >= 2.0) m = std::max(m, 0.0);
    if ((hi >= 0.5 && lo <= 2.0) || (hi >= -2.0 && lo <= -0.5)) m = 2.0;
    return m;
  };
  p.p_beta = 1.0;
  p.kappa_beta = 2.0;
  p.C_beta = 1.0;
  p.c_beta = 3.5;
  p.ell = 2.0;
  return p;
}

namespace detail {

// Σ b_k r^{2k+1}
inline double horner_odd(const std::vector<double>& b, double r) {
  const double r2 = r * r;
  double acc = 0.0;
  for (auto it = b.rbegin(); it != b.rend(); ++it) acc = acc * r2 + *it;
  return acc * r;
}

}  // namespace detail

/// Custom polynomial potential with monotone part β(r) = Σ_k b_k r^{2k+1}
/// (b_k ≥ 0) and linear perturbation λ; ψ is shifted so that min ψ = 0.
inline Potential make_polynomial_potential(std::vector<double> beta_coeffs, double lambda) {
  if (beta_coeffs.empty()) throw ConfigError("potential: need at least one beta coefficient");
  for (double b : beta_coeffs)
    if (!(b >= 0.0) || !std::isfinite(b))
      throw ConfigError("potential: beta coefficients must be nonnegative");
  if (!(lambda >= 0.0)) throw ConfigError("potential: lambda must be nonnegative");
  while (beta_coeffs.size() > 1 && beta_coeffs.back() == 0.0) beta_coeffs.pop_back();
  if (beta_coeffs.back() == 0.0) throw ConfigError("potential: beta must not vanish");
  if (beta_coeffs.size() == 1 && lambda > beta_coeffs[0])
    throw ConfigError("potential: linear beta must dominate lambda (psi unbounded below)");

  Potential p;
  p.kind = PotentialKind::custom;
  p.lambda = lambda;
  p.beta_coeffs = beta_coeffs;
  const auto b = beta_coeffs;
  p.beta = [b](double r) { return detail::horner_odd(b, r); };
  p.beta_hat = [b](double r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k)
      acc += b[k] * std::pow(r, 2.0 * k + 2.0) / (2.0 * k + 2.0);
    return acc;
  };
  auto beta_prime = [b](double r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k)
      acc += b[k] * (2.0 * k + 1.0) * std::pow(r, 2.0 * k);
    return acc;
  };
  auto raw_psi = [bh = p.beta_hat, lambda](double r) { return bh(r) - 0.5 * lambda * r * r; };
  // minimum of raw ψ: the nonnegative root of β(r) = λr, found by bisection
  double rmin = 0.0;
  if (lambda > b[0]) {
    double lo = 0.0, hi = 1.0;
    while (detail::horner_odd(b, hi) < lambda * hi) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::horner_odd(b, mid) < lambda * mid ? lo : hi) = mid;
    }
    rmin = 0.5 * (lo + hi);
  }
  const double shift = -raw_psi(rmin);
  p.psi = [raw_psi, shift](double r) { return raw_psi(r) + shift; };
  p.psi_prime = [beta = p.beta, lambda](double r) { return beta(r) - lambda * r; };
  p.psi_second = [beta_prime, lambda](double r) { return beta_prime(r) - lambda; };
  p.max_curvature = [beta_prime, lambda](double lo, double hi) {
    return beta_prime(std::max(std::abs(lo), std::abs(hi))) - lambda;
  };
  const std::size_t top = b.size() - 1;
  p.p_beta = 2.0 * top + 1.0;
  p.kappa_beta = b[top];
  // C_β and c_β estimated on a dense sample
  double cb = 0.0, growth = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    const double r = i * 0.005;
    const double bv = p.beta(r);
    cb = std::max(cb, p.kappa_beta * std::pow(std::abs(r), p.p_beta) - std::abs(bv));
    growth = std::max(growth, std::abs(bv) / (1.0 + p.psi(r)));
  }
  p.C_beta = cb;
  p.c_beta = growth;
  p.ell = top >= 1 || lambda < b[0] ? std::numeric_limits<double>::infinity() : 0.0;
  return p;
}

/// Monotone C¹ proliferation switch: −h_star below phi_star, 0 at −1, 1 from
/// +1 on, joined by cubic smoothsteps.
class Proliferation {
 public:
  Proliferation() = default;

  double h_star() const { return h_star_; }
  double phi_star() const { return phi_star_; }

  double operator()(double r) const { return h(r); }

  double h(double r) const {
    if (r >= 1.0) return 1.0;
    if (r >= -1.0) return step((r + 1.0) * 0.5);
    if (r <= phi_star_ || h_star_ == 0.0) return -h_star_;
    return -h_star_ + h_star_ * step((r - phi_star_) / (-1.0 - phi_star_));
  }

  double h_prime(double r) const {
    if (r >= 1.0) return 0.0;
    if (r >= -1.0) return 0.5 * step_slope((r + 1.0) * 0.5);
    if (r <= phi_star_ || h_star_ == 0.0) return 0.0;
    const double w = -1.0 - phi_star_;
    return h_star_ * step_slope((r - phi_star_) / w) / w;
  }

  bool operator==(const Proliferation&) const = default;

 private:
  friend Proliferation make_proliferation(double h_star, double phi_star);

  static double step(double u) { return u * u * (3.0 - 2.0 * u); }
  static double step_slope(double u) { return 6.0 * u * (1.0 - u); }

  double h_star_ = 0.0;
  double phi_star_ = -1.0;
};

inline Proliferation make_proliferation(double h_star, double phi_star) {
  if (!(h_star >= 0.0) || !std::isfinite(h_star))
    throw ConfigError("h: h_star must be nonnegative");
  if (!(phi_star <= -1.0) || !std::isfinite(phi_star))
    throw ConfigError("h: phi_star must be <= -1");
  if (h_star > 0.0 && !(phi_star < -1.0))
    throw ConfigError("h: h_star > 0 requires phi_star < -1");
  Proliferation p;
  p.h_star_ = h_star;
  p.phi_star_ = phi_star;
  return p;
}

// ---------------------------------------------------------------------------
// Dissipativity certificate

struct DissipativityCert {
  // h_star > 0 and B − C·h_star > 0
  bool nutrient_decay = false;
  // B·sigma_s / (B − C·h_star) < 1
  bool nutrient_bound = false;
  // A − P·B·sigma_s / (B − C·h_star) > 0
  bool net_apoptosis = false;
  // p_beta > 2 with coercive β
  bool superquadratic = false;

  double decay_margin = 0.0;      // B − C·h_star
  double bound_margin = 0.0;      // 1 − sigma_upper_limit
  double apoptosis_margin = 0.0;  // A − P·sigma_upper_limit
  double growth_margin = 0.0;     // p_beta − 2

  std::optional<double> epsilon;      // half of epsilon_max
  std::optional<double> epsilon_max;  // largest admissible ε (supremum)
  std::optional<double> T1;           // arrival time for `epsilon`
  std::optional<double> T1_at_epsilon_max;

  double sigma_upper_limit = std::numeric_limits<double>::infinity();
  double sigma_lower_limit = 0.0;

  bool dissipative() const {
    return nutrient_decay && nutrient_bound && net_apoptosis && superquadratic;
  }
};

/// B·sigma_s / (B − C·h_star); +inf when the denominator is not positive.
inline double sigma_upper_limit(const Params& p, const Proliferation& h) {
  const double d = p.B - p.C * h.h_star();
  return d > 0.0 ? p.B * p.sigma_s / d : std::numeric_limits<double>::infinity();
}

inline double sigma_lower_limit(const Params& p) { return p.B * p.sigma_s / (p.B + p.C); }

/// Time after which σ lies within ε/P of both envelope limits.
inline double arrival_time(const Params& p, const Proliferation& h, double eps) {
  const double d = p.B - p.C * h.h_star();
  if (!(d > 0.0)) throw DomainError("arrival_time: requires B - C*h_star > 0");
  if (!(eps > 0.0)) throw DomainError("arrival_time: requires eps > 0");
  const double lower = std::log(p.B * p.sigma_s * p.P / (eps * (p.B + p.C))) / (p.B + p.C);
  const double upper = std::log(p.P * (d - p.B * p.sigma_s) / (eps * d)) / d;
  return std::max({0.0, lower, upper});
}

namespace detail {

inline bool sampled_coercivity(const Potential& pot) {
  if (!(pot.kappa_beta > 0.0) || !(pot.C_beta >= 0.0)) return false;
  if (pot.kind != PotentialKind::custom) return true;
  // β(r)·sign(r) ≥ κ|r|^p − C on [−100, 100]; the deficit must not grow outward
  double inner_deficit = -std::numeric_limits<double>::infinity();
  double outer_deficit = inner_deficit;
  for (int i = -20000; i <= 20000; ++i) {
    const double r = i * 0.005;
    const double s = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
    const double deficit = pot.kappa_beta * std::pow(std::abs(r), pot.p_beta) - pot.beta(r) * s;
    if (deficit > pot.C_beta * (1.0 + 1e-12) + 1e-12) return false;
    double& slot = std::abs(r) <= 50.0 ? inner_deficit : outer_deficit;
    slot = std::max(slot, deficit);
  }
  return outer_deficit <= std::max(inner_deficit, 0.0) + 1e-9;
}

}  // namespace detail

inline DissipativityCert check_dissipativity(const Params& params, const Potential& pot,
                                             const Proliferation& prolif) {
  DissipativityCert c;
  const double d = params.B - params.C * prolif.h_star();
  c.decay_margin = d;
  c.nutrient_decay = prolif.h_star() > 0.0 && d > 0.0;
  c.sigma_lower_limit = sigma_lower_limit(params);
  c.sigma_upper_limit = sigma_upper_limit(params, prolif);
  if (d > 0.0) {
    c.bound_margin = 1.0 - c.sigma_upper_limit;
    c.apoptosis_margin = params.A - params.P * c.sigma_upper_limit;
  } else {
    c.bound_margin = -std::numeric_limits<double>::infinity();
    c.apoptosis_margin = -std::numeric_limits<double>::infinity();
  }
  c.nutrient_bound = d > 0.0 && c.bound_margin > 0.0;
  c.net_apoptosis = d > 0.0 && c.apoptosis_margin > 0.0;
  c.growth_margin = pot.p_beta - 2.0;
  c.superquadratic = pot.p_beta > 2.0 && detail::sampled_coercivity(pot);

  if (c.dissipative()) {
    const double eps_max = std::min(0.5 * c.apoptosis_margin, params.P * c.bound_margin);
    c.epsilon_max = eps_max;
    c.epsilon = 0.5 * eps_max;
    c.T1 = arrival_time(params, prolif, *c.epsilon);
    c.T1_at_epsilon_max = arrival_time(params, prolif, eps_max);
  }
  return c;
}

/// S₊(t): supersolution of the nutrient equation starting from 1.
inline double envelope_upper(const Params& p, const Proliferation& h, double t) {
  const double d = p.B - p.C * h.h_star();
  if (!(d > 0.0)) throw DomainError("envelope_upper: requires B - C*h_star > 0");
  const double e = std::exp(-d * t);
  return e + p.B * p.sigma_s / d * (1.0 - e);
}

/// S₋(t): subsolution of the nutrient equation starting from 0.
inline double envelope_lower(const Params& p, double t) {
  return sigma_lower_limit(p) * (1.0 - std::exp(-(p.B + p.C) * t));
}

}  // namespace chtumor
