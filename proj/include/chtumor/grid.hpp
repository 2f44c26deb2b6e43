// grid.hpp
// Uniform cell-centered grids in 1/2/3 dimensions with homogeneous Neumann
// (no-flux) boundaries: fields, the mirrored-ghost Laplacian, discrete norms,
// and the two linear solves used by the time stepper.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "chtumor/errors.hpp"

namespace chtumor {

/// Uniform rectangular grid. Axes beyond `dim` are inert (one cell, unit length).
struct GridSpec {
  int dim = 1;
  std::array<int, 3> cells{1, 1, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  static GridSpec make(std::span<const int> n, std::span<const double> len) {
    if (n.empty() || n.size() > 3 || n.size() != len.size())
      throw ConfigError("grid: need 1 to 3 axes with matching cells and lengths");
    GridSpec g;
    g.dim = static_cast<int>(n.size());
    for (std::size_t a = 0; a < n.size(); ++a) {
      if (n[a] < 1) throw ConfigError("grid: cells per axis must be positive");
      if (!(len[a] > 0.0) || !std::isfinite(len[a]))
        throw ConfigError("grid: lengths must be positive and finite");
      g.cells[a] = n[a];
      g.lengths[a] = len[a];
    }
    return g;
  }
  static GridSpec line(int n, double length) {
    return make(std::array<int, 1>{n}, std::array<double, 1>{length});
  }
  static GridSpec square(int n, double length) {
    return make(std::array<int, 2>{n, n}, std::array<double, 2>{length, length});
  }
  static GridSpec cube(int n, double length) {
    return make(std::array<int, 3>{n, n, n},
                std::array<double, 3>{length, length, length});
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(cells[a]);
    return s;
  }
  double spacing(int axis) const { return lengths[axis] / cells[axis]; }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= lengths[a];
    return v;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing(a);
    return v;
  }

  /// Row-major view of one axis as (outer, n, inner) blocks.
  struct AxisLayout {
    std::size_t outer, n, inner;
  };
  AxisLayout layout(int axis) const {
    AxisLayout l{1, static_cast<std::size_t>(cells[axis]), 1};
    for (int b = 0; b < axis; ++b) l.outer *= cells[b];
    for (int b = axis + 1; b < dim; ++b) l.inner *= cells[b];
    return l;
  }

  /// Coordinate of the center of cell `j` along `axis`.
  double center(int axis, std::size_t j) const {
    return (static_cast<double>(j) + 0.5) * spacing(axis);
  }

  bool operator==(const GridSpec&) const = default;
};

/// Scalar cell data on a grid, row-major.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  Field(const GridSpec& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw ConfigError("field: value count does not match the grid");
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

  bool finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  template <class F>
  Field map(F&& f) const {
    Field out(grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = f(values_[i]);
    return out;
  }

  Field& operator+=(const Field& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double c, Field a) { return a *= c; }

  bool operator==(const Field&) const = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

namespace detail {

inline void require_same_grid(const Field& f, const Field& g) {
  if (!(f.grid() == g.grid()))
    throw std::invalid_argument("fields live on different grids");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// out += c * (second difference of f along axis), ghosts mirrored
inline void add_axis_second_difference(const GridSpec& g, int axis, double c,
                                       std::span<const double> f, std::span<double> out) {
  const auto l = g.layout(axis);
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t j = 0; j < l.n; ++j) {
      const std::size_t base = (o * l.n + j) * l.inner;
      const std::size_t left = j > 0 ? base - l.inner : base;
      const std::size_t right = j + 1 < l.n ? base + l.inner : base;
      for (std::size_t i = 0; i < l.inner; ++i) {
        out[base + i] += c * ((f[left + i] - f[base + i]) + (f[right + i] - f[base + i]));
      }
    }
  }
}

inline void laplacian_into(const GridSpec& g, std::span<const double> f, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < g.dim; ++a) {
    const double h = g.spacing(a);
    add_axis_second_difference(g, a, 1.0 / (h * h), f, out);
  }
}

}  // namespace detail

/// Δ_h f with the (2·dim+1)-point stencil and mirrored ghost cells.
inline Field laplacian_neumann(const Field& f) {
  Field out(f.grid());
  detail::laplacian_into(f.grid(), f.values(), out.values());
  return out;
}

inline double integral(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

/// Volume-weighted average.
inline double mean(const Field& f) { return integral(f) / f.grid().volume(); }

inline double inner(const Field& f, const Field& g) {
  detail::require_same_grid(f, g);
  return detail::dot(f.values(), g.values()) * f.grid().cell_volume();
}

inline double l2_norm(const Field& f) { return std::sqrt(inner(f, f)); }

/// ‖∇_h f‖² summed over interior faces; equals −inner(f, Δ_h f).
inline double grad_sq_norm(const Field& f) {
  const GridSpec& g = f.grid();
  double total = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const auto l = g.layout(a);
    const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
    double s = 0.0;
    for (std::size_t o = 0; o < l.outer; ++o)
      for (std::size_t j = 0; j + 1 < l.n; ++j) {
        const std::size_t base = (o * l.n + j) * l.inner;
        for (std::size_t i = 0; i < l.inner; ++i) {
          const double d = f[base + l.inner + i] - f[base + i];
          s += d * d;
        }
      }
    total += s * inv_h2;
  }
  return total * g.cell_volume();
}

// ---------------------------------------------------------------------------
// Linear solvers

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Unpreconditioned conjugate gradient for a symmetric positive definite
/// operator given as `apply(in, out)`. Stops on ‖A x − b‖₂ ≤ tol·‖b‖₂, checked
/// against the true residual; `x` carries the initial guess.
template <class Apply>
SolveStats conjugate_gradient(Apply&& apply, std::span<const double> b, std::span<double> x,
                              double tol, std::size_t max_iterations) {
  const std::size_t n = b.size();
  const double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  std::vector<double> r(n), p(n), q(n);
  std::size_t it = 0;
  double rel = 0.0;

  auto true_residual = [&] {
    apply(std::span<const double>(x), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    return detail::norm2(r) / bnorm;
  };

  rel = true_residual();
  while (rel > tol && it < max_iterations) {
    // (re)start from the current true residual
    p = r;
    double rr = detail::dot(r, r);
    while (it < max_iterations) {
      ++it;
      apply(std::span<const double>(p), std::span<double>(q));
      const double pq = detail::dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rr / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      const double rr_new = detail::dot(r, r);
      if (std::sqrt(rr_new) <= 0.5 * tol * bnorm) break;
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    const double previous = rel;
    rel = true_residual();
    if (rel > tol && !(rel < previous)) break;  // stagnated at round-off
  }
  if (rel > tol) {
    std::ostringstream msg;
    msg << "conjugate gradient did not converge: relative residual " << rel << " after "
        << it << " iterations (tolerance " << tol << ")";
    throw SolverError(msg.str(), rel, it);
  }
  return {it, rel};
}

inline std::size_t default_iteration_cap(const GridSpec& g) { return 10 * g.size(); }

/// Solves (a·I − b·Δ_h) u = rhs by CG; `a` may vary per cell.
inline Field solve_helmholtz(const Field& a, double b, const Field& rhs, double tol,
                             SolveStats* stats = nullptr) {
  detail::require_same_grid(a, rhs);
  if (b < 0.0) throw std::invalid_argument("solve_helmholtz: b must be nonnegative");
  for (double v : a.values())
    if (!(v > 0.0)) throw std::invalid_argument("solve_helmholtz: a must be positive");
  const GridSpec& g = rhs.grid();
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    detail::laplacian_into(g, in, out);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = a[i] * in[i] - b * out[i];
  };
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rhs[i] / a[i];
  auto s = conjugate_gradient(apply, rhs.values(), u.values(), tol, default_iteration_cap(g));
  if (stats) *stats = s;
  return u;
}

inline Field solve_helmholtz(double a, double b, const Field& rhs, double tol,
                             SolveStats* stats = nullptr) {
  return solve_helmholtz(Field(rhs.grid(), a), b, rhs, tol, stats);
}

/// Applies (I + dt·s·(−Δ_h) + dt·Δ_h²).
inline void apply_ch_operator(const GridSpec& g, double dt, double s, std::span<const double> in,
                              std::span<double> out) {
  std::vector<double> lap(in.size());
  detail::laplacian_into(g, in, lap);
  detail::laplacian_into(g, lap, out);
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = in[i] - dt * s * lap[i] + dt * out[i];
}

/// Solves (I + dt·s·(−Δ_h) + dt·Δ_h²) u = rhs by CG.
inline Field solve_ch_linear(double dt, double s, const Field& rhs, double tol,
                             SolveStats* stats = nullptr) {
  if (!(dt > 0.0) || s < 0.0)
    throw std::invalid_argument("solve_ch_linear: need dt > 0 and s >= 0");
  const GridSpec& g = rhs.grid();
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    apply_ch_operator(g, dt, s, in, out);
  };
  Field u = rhs;
  auto st = conjugate_gradient(apply, rhs.values(), u.values(), tol, default_iteration_cap(g));
  if (stats) *stats = st;
  return u;
}

/// Orthonormal cosine basis (DCT-II per axis) that diagonalizes −Δ_h on a
/// uniform Neumann grid. Used as a direct solver for constant-coefficient
/// operators that are functions of Δ_h.
class NeumannBasis {
 public:
  explicit NeumannBasis(const GridSpec& g) : grid_(g), eigenvalues_(g.size(), 0.0) {
    for (int a = 0; a < g.dim; ++a) {
      const std::size_t n = g.cells[a];
      const double h = g.spacing(a);
      auto& m = matrix_[a];
      m.resize(n * n);
      for (std::size_t k = 0; k < n; ++k) {
        const double w = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j)
          m[k * n + j] = w * std::cos(std::numbers::pi * static_cast<double>(k) *
                                      (static_cast<double>(j) + 0.5) / static_cast<double>(n));
      }
      const auto l = g.layout(a);
      for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t k = 0; k < l.n; ++k) {
          const double sn = std::sin(std::numbers::pi * static_cast<double>(k) /
                                     (2.0 * static_cast<double>(n)));
          const double lam = 4.0 * sn * sn / (h * h);
          for (std::size_t i = 0; i < l.inner; ++i)
            eigenvalues_[(o * l.n + k) * l.inner + i] += lam;
        }
    }
  }

  const GridSpec& grid() const { return grid_; }
  /// Eigenvalue of −Δ_h for each mode, in the same layout as a field.
  std::span<const double> eigenvalues() const { return eigenvalues_; }

  std::vector<double> forward(std::span<const double> f) const { return transform(f, false); }
  std::vector<double> inverse(std::span<const double> c) const { return transform(c, true); }

  /// u = g(−Δ_h)^{-1} rhs, with `symbol(λ)` the eigenvalue of g at λ.
  template <class Symbol>
  Field solve(Symbol&& symbol, const Field& rhs) const {
    auto c = forward(rhs.values());
    for (std::size_t m = 0; m < c.size(); ++m) c[m] /= symbol(eigenvalues_[m]);
    return Field(grid_, inverse(c));
  }

 private:
  std::vector<double> transform(std::span<const double> in, bool transpose) const {
    std::vector<double> cur(in.begin(), in.end()), next(in.size());
    for (int a = 0; a < grid_.dim; ++a) {
      const auto l = grid_.layout(a);
      const auto& m = matrix_[a];
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t k = 0; k < l.n; ++k) {
          double* dst = next.data() + (o * l.n + k) * l.inner;
          for (std::size_t j = 0; j < l.n; ++j) {
            const double c = transpose ? m[j * l.n + k] : m[k * l.n + j];
            const double* src = cur.data() + (o * l.n + j) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) dst[i] += c * src[i];
          }
        }
      std::swap(cur, next);
    }
    return cur;
  }

  GridSpec grid_;
  std::array<std::vector<double>, 3> matrix_;
  std::vector<double> eigenvalues_;
};

inline Field solve_helmholtz_spectral(const NeumannBasis& basis, double a, double b,
                                      const Field& rhs) {
  return basis.solve([=](double lam) { return a + b * lam; }, rhs);
}

inline Field solve_ch_linear_spectral(const NeumannBasis& basis, double dt, double s,
                                      const Field& rhs) {
  return basis.solve([=](double lam) { return 1.0 + dt * s * lam + dt * lam * lam; }, rhs);
}

/// Euclidean residual ‖op(u) − rhs‖₂ / ‖rhs‖₂ for the CH operator.
inline double ch_relative_residual(double dt, double s, const Field& u, const Field& rhs) {
  std::vector<double> out(u.size());
  apply_ch_operator(u.grid(), dt, s, u.values(), out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rhs[i];
  const double bn = detail::norm2(rhs.values());
  return bn == 0.0 ? detail::norm2(out) : detail::norm2(out) / bn;
}

}  // namespace chtumor
