#include "nlcap/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nlcap/errors.hpp"

namespace nlcap {
namespace {

constexpr double kLn2 = std::numbers::ln2;

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }


// Solves the SPD system a x = b in place (n x n, row-major). Returns false
// if the matrix is not numerically positive definite.
bool cholesky_solve(std::vector<double>& a, std::size_t n,
                    std::vector<double>& b) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
    b[i] = v / a[i * n + i];
  }
  return true;
}

// Newton ascent step for I(p;W) on the simplex, restricted to inputs that
// carry mass or whose divergence exceeds the current information. Writes
// the trial point into `p` and returns false when no ascent step exists.
bool newton_step(const Channel& w, std::span<const double> q,
                 std::span<const double> div, double info,
                 std::vector<double>& p) {
  const std::size_t nx = w.n_inputs();
  const std::size_t nz = w.n_outputs();
  std::vector<std::size_t> active;
  for (std::size_t x = 0; x < nx; ++x)
    if (p[x] > 1e-13 || div[x] > info) active.push_back(x);
  const std::size_t k = active.size();
  if (k < 2) return false;

  // -Hessian: sum_z W_xz W_yz / q_z, plus a small ridge.
  std::vector<double> inv_q(nz);
  for (std::size_t z = 0; z < nz; ++z) inv_q[z] = q[z] > 0.0 ? 1.0 / q[z] : 0.0;
  std::vector<double> hess(k * k, 0.0);
  std::vector<double> scaled(nz);
  double trace = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double* wi = w.row(active[i]).data();
    for (std::size_t z = 0; z < nz; ++z) scaled[z] = wi[z] * inv_q[z];
    for (std::size_t j = 0; j <= i; ++j) {
      const double* wj = w.row(active[j]).data();
      double v = 0.0;
      for (std::size_t z = 0; z < nz; ++z) v += scaled[z] * wj[z];
      hess[i * k + j] = v;
      hess[j * k + i] = v;
    }
    trace += hess[i * k + i];
  }
  const double ridge = 1e-10 * trace / static_cast<double>(k);

  // Equality-constrained Newton on the free set: d = u - nu v with
  // A u = g, A v = 1, sum d = 0. Zero-mass inputs that would go negative
  // are fixed at zero and the system is solved again.
  std::vector<char> free(k, 1);
  std::vector<double> d(k, 0.0);
  for (;;) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < k; ++i)
      if (free[i]) idx.push_back(i);
    const std::size_t m = idx.size();
    if (m < 2) return false;
    std::vector<double> a(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        a[i * m + j] = hess[idx[i] * k + idx[j]] + (i == j ? ridge : 0.0);
    std::vector<double> a2 = a;
    std::vector<double> u(m), v(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) u[i] = div[active[idx[i]]];
    if (!cholesky_solve(a, m, u) || !cholesky_solve(a2, m, v)) return false;
    double su = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      su += u[i];
      sv += v[i];
    }
    if (!(sv > 0.0)) return false;
    const double nu = su / sv;
    std::fill(d.begin(), d.end(), 0.0);
    bool pinned = false;
    for (std::size_t i = 0; i < m; ++i) {
      d[idx[i]] = u[i] - nu * v[i];
      if (d[idx[i]] < 0.0 && p[active[idx[i]]] <= 0.0) {
        free[idx[i]] = 0;
        pinned = true;
      }
    }
    if (!pinned) break;
  }

  double alpha = 1.0;
  double slope = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    slope += d[i] * div[active[i]];
    if (d[i] < 0.0) alpha = std::min(alpha, p[active[i]] / -d[i]);
  }
  if (!(slope > 0.0) || !(alpha > 0.0)) return false;
  for (std::size_t i = 0; i < k; ++i) {
    double& px = p[active[i]];
    px = std::max(0.0, px + alpha * d[i]);
  }
  double total = 0.0;
  for (double x : p) total += x;
  for (double& x : p) x /= total;
  return true;
}

}  // namespace

Channel::Channel(std::size_t n_inputs, std::size_t n_outputs,
                 std::vector<double> w, double tol)
    : n_in_(n_inputs), n_out_(n_outputs), w_(std::move(w)) {
  if (n_in_ == 0 || n_out_ == 0) throw ShapeError("channel must be non-empty");
  if (w_.size() != n_in_ * n_out_)
    throw ShapeError("channel matrix has " + std::to_string(w_.size()) +
                     " entries, expected " + std::to_string(n_in_ * n_out_));
  for (std::size_t x = 0; x < n_in_; ++x) {
    double total = 0.0;
    for (double v : row(x)) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("channel row " + std::to_string(x) +
                              " has a negative or non-finite entry");
      total += v;
    }
    if (std::abs(total - 1.0) > tol)
      throw ValidationError("channel row " + std::to_string(x) + " sums to " +
                            std::to_string(total));
  }
}

Channel kronecker(const Channel& lhs, const Channel& rhs) {
  const std::size_t ni = lhs.n_in_ * rhs.n_in_;
  const std::size_t no = lhs.n_out_ * rhs.n_out_;
  std::vector<double> w(ni * no);
  for (std::size_t x1 = 0; x1 < lhs.n_in_; ++x1)
    for (std::size_t x2 = 0; x2 < rhs.n_in_; ++x2)
      for (std::size_t z1 = 0; z1 < lhs.n_out_; ++z1)
        for (std::size_t z2 = 0; z2 < rhs.n_out_; ++z2)
          w[(x1 * rhs.n_in_ + x2) * no + z1 * rhs.n_out_ + z2] =
              lhs(x1, z1) * rhs(x2, z2);
  return Channel(ni, no, std::move(w));
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h -= xlogx(v);
  return h / kLn2;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d / kLn2;
}

std::vector<double> output_distribution(std::span<const double> p,
                                        const Channel& w) {
  if (p.size() != w.n_inputs())
    throw ShapeError("input distribution does not match channel inputs");
  std::vector<double> q(w.n_outputs(), 0.0);
  for (std::size_t x = 0; x < w.n_inputs(); ++x) {
    if (p[x] == 0.0) continue;
    const auto row = w.row(x);
    for (std::size_t z = 0; z < q.size(); ++z) q[z] += p[x] * row[z];
  }
  return q;
}

double mutual_information(std::span<const double> p, const Channel& w) {
  const auto q = output_distribution(p, w);
  double info = 0.0;
  for (std::size_t x = 0; x < w.n_inputs(); ++x) {
    if (p[x] == 0.0) continue;
    const auto row = w.row(x);
    double d = 0.0;
    for (std::size_t z = 0; z < q.size(); ++z)
      if (row[z] > 0.0) d += row[z] * std::log(row[z] / q[z]);
    info += p[x] * d;
  }
  return std::max(0.0, info / kLn2);
}

CapacityResult channel_capacity(const Channel& w, const CapacityOptions& opts) {
  if (!(opts.tol_bits > 0.0)) throw ValidationError("tol_bits must be positive");
  const std::size_t nx = w.n_inputs();
  const std::size_t nz = w.n_outputs();

  std::vector<double> p(nx, 1.0 / static_cast<double>(nx));
  if (!opts.initial.empty()) {
    if (opts.initial.size() != nx)
      throw ShapeError("warm start does not match channel inputs");
    // Keep every input strictly positive so no divergence is dropped.
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      p[x] = std::max(opts.initial[x], 0.0) + 1e-12;
      total += p[x];
    }
    for (double& v : p) v /= total;
  }

  // Row negentropies sum_z W ln W are fixed; each iteration only needs ln q.
  std::vector<double> negent(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (double v : w.row(x)) negent[x] += xlogx(v);

  const double tol_nats = opts.tol_bits * kLn2;
  const double mu_max = std::max(1.0, opts.max_relaxation);
  const bool trials = mu_max > 1.0 || opts.newton_steps;
  std::vector<double> q(nz), logq(nz), div(nx);
  std::vector<double> base_p, base_q, base_div;
  CapacityResult res;
  double lower = 0.0, upper = 0.0;
  double base_lower = -1.0, base_upper = 0.0;
  double mu = 1.0;
  bool trial_step = false;  // the pending iterate came from a non-classical step
  int newton_cooldown = 2;
  int it = 0;
  for (;; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      const double px = p[x];
      if (px == 0.0) continue;
      const double* row = w.row(x).data();
      for (std::size_t z = 0; z < nz; ++z) q[z] += px * row[z];
    }
    for (std::size_t z = 0; z < nz; ++z)
      logq[z] = q[z] > 0.0 ? std::log(q[z]) : 0.0;

    lower = 0.0;
    upper = -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < nx; ++x) {
      const double* row = w.row(x).data();
      double cross = 0.0;
      bool unreachable = false;
      for (std::size_t z = 0; z < nz; ++z) {
        if (row[z] > 0.0 && q[z] <= 0.0) unreachable = true;
        cross += row[z] * logq[z];
      }
      div[x] = unreachable ? std::numeric_limits<double>::infinity()
                           : std::max(0.0, negent[x] - cross);
      if (p[x] > 0.0) lower += p[x] * div[x];
      upper = std::max(upper, div[x]);
    }
    lower = std::max(0.0, lower);

    if (trial_step && !(lower >= base_lower)) {
      // The trial step lost ground: restore and take a classical step.
      p = base_p;
      q = base_q;
      div = base_div;
      lower = base_lower;
      upper = base_upper;
      mu = 1.0;
      newton_cooldown = 5;
      trial_step = false;
    } else {
      if (opts.record_history) {
        res.lower_history.push_back(lower / kLn2);
        res.upper_history.push_back(upper / kLn2);
      }
      if (upper - lower <= tol_nats) {
        res.converged = true;
        break;
      }
      if (trials) {
        base_p = p;
        base_q = q;
        base_div = div;
        base_lower = lower;
        base_upper = upper;
        if (it > 0) mu = std::min(mu_max, mu * 2.0);
      }
    }
    if (it >= opts.max_iters) break;

    trial_step = false;
    if (opts.newton_steps && newton_cooldown == 0 && std::isfinite(upper)) {
      trial_step = newton_step(w, q, div, lower, p);
      if (!trial_step) newton_cooldown = 5;
    }
    if (newton_cooldown > 0) --newton_cooldown;
    if (!trial_step) {
      // Zero-mass inputs with infinite divergence get mass back.
      const double cap = std::isfinite(upper) ? upper : 0.0;
      const double step = (mu > 1.0) ? mu : 1.0;
      double total = 0.0;
      for (std::size_t x = 0; x < nx; ++x) {
        if (!std::isfinite(div[x])) {
          p[x] = std::max(p[x], 1e-12);
        } else {
          p[x] *= std::exp(step * (div[x] - cap));
        }
        total += p[x];
      }
      for (double& v : p) v /= total;
      trial_step = mu > 1.0;
    }
  }

  res.capacity_bits = lower / kLn2;
  res.upper_bits = upper / kLn2;
  res.gap_bits = std::max(0.0, res.upper_bits - res.capacity_bits);
  res.iterations = it;
  res.p_star = std::move(p);
  res.q_star = std::move(q);
  res.divergences_nats = std::move(div);
  if (!res.converged && opts.throw_on_limit) {
    throw ConvergenceError("Blahut-Arimoto did not reach tol " +
                               std::to_string(opts.tol_bits) + " bits in " +
                               std::to_string(opts.max_iters) + " iterations",
                           res.gap_bits);
  }
  return res;
}

}  // namespace nlcap
