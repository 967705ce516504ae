#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

namespace {

double info2(const std::vector<std::vector<double>>& w, double p) {
  double total = 0.0;
  for (std::size_t z = 0; z < w[0].size(); ++z) {
    const double q = p * w[0][z] + (1.0 - p) * w[1][z];
    if (w[0][z] > 0.0) total += p * w[0][z] * std::log2(w[0][z] / q);
    if (w[1][z] > 0.0) total += (1.0 - p) * w[1][z] * std::log2(w[1][z] / q);
  }
  return total;
}

// Two inputs: I(p) is concave in p, so golden-section search suffices.
double capacity2(const std::vector<std::vector<double>>& w) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = info2(w, x1), f2 = info2(w, x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = info2(w, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = info2(w, x1);
    }
  }
  return std::max({f1, f2, info2(w, 0.5 * (lo + hi)), 0.0});
}

}  // namespace

double capacity(const std::vector<std::vector<double>>& w, double tol) {
  if (w.size() == 2) return capacity2(w);
  const std::size_t nx = w.size();
  const std::size_t nz = w[0].size();
  std::vector<double> p(nx, 1.0 / static_cast<double>(nx)), q(nz), d(nx);
  double lower = 0.0;
  for (int it = 0; it < 200000; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t z = 0; z < nz; ++z) q[z] += p[x] * w[x][z];
    lower = 0.0;
    double upper = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      d[x] = 0.0;
      for (std::size_t z = 0; z < nz; ++z)
        if (w[x][z] > 0.0) d[x] += w[x][z] * std::log2(w[x][z] / q[z]);
      lower += p[x] * d[x];
      upper = std::max(upper, d[x]);
    }
    if (upper - lower <= tol) break;
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      p[x] *= std::exp2(d[x]);
      total += p[x];
    }
    for (double& v : p) v /= total;
  }
  return lower;
}

namespace {

using C = std::complex<double>;
using M2 = std::array<std::array<C, 2>, 2>;

M2 projector(const nlcap::BlochVector& v, int outcome) {
  const double sign = outcome == 0 ? 1.0 : -1.0;
  // (I + sign v.sigma) / 2 with sigma_y = [[0, -i], [i, 0]].
  M2 m;
  m[0][0] = 0.5 * (1.0 + sign * v.z);
  m[1][1] = 0.5 * (1.0 - sign * v.z);
  m[0][1] = 0.5 * sign * C(v.x, -v.y);
  m[1][0] = 0.5 * sign * C(v.x, v.y);
  return m;
}

Matrix4 kron(const M2& a, const M2& b) {
  Matrix4 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
  return out;
}

}  // namespace

double born_probability(const Matrix4& rho, const nlcap::BlochVector& a,
                        const nlcap::BlochVector& b, int r, int s) {
  const Matrix4 op = kron(projector(a, r), projector(b, s));
  C tr = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) tr += rho[i][k] * op[k][i];
  return tr.real();
}

Matrix4 werner_matrix(double gamma) {
  Matrix4 m{};
  const double phi[4] = {1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      m[i][j] = gamma * phi[i] * phi[j] + (i == j ? (1.0 - gamma) / 4.0 : 0.0);
  return m;
}

nlcap::NSBox random_box_2222(std::mt19937_64& rng, bool nonlocal) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const nlcap::BoxShape shape{2, 2, 2, 2};
  for (;;) {
    const double A[2] = {u(rng), u(rng)};
    const double B[2] = {u(rng), u(rng)};
    const double E[2][2] = {{u(rng), u(rng)}, {u(rng), u(rng)}};
    std::vector<double> p;
    bool ok = true;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int r = 0; r < 2; ++r)
          for (int s = 0; s < 2; ++s) {
            const double sr = r ? -1.0 : 1.0;
            const double ss = s ? -1.0 : 1.0;
            const double v = 0.25 * (1.0 + sr * A[a] + ss * B[b] + sr * ss * E[a][b]);
            ok = ok && v >= 0.0;
            p.push_back(v);
          }
    // Largest CHSH combination: one correlator enters with a minus sign.
    double chsh = 0.0;
    for (int flip = 0; flip < 4; ++flip) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += (k == flip ? -1.0 : 1.0) * E[k / 2][k % 2];
      chsh = std::max(chsh, std::abs(v));
    }
    if (nonlocal && chsh <= 2.0) ok = false;
    if (ok) return nlcap::NSBox(shape, std::move(p), "random");
  }
}

double grid_nonlocal_capacity(const nlcap::NSBox& box, double resolution) {
  // Block (r, a) holds sigma over (s1, s2) with s1 the outcome for b = 0.
  // With t1 = P(s1 = 0), t2 = P(s2 = 0) fixed, x = sigma(0, 0) is free on
  // [max(0, t1 + t2 - 1), min(t1, t2)].
  struct Block {
    int a;
    double weight, t1, t2, lo, hi;
  };
  std::vector<Block> blocks;
  for (int a = 0; a < 2; ++a)
    for (int r = 0; r < 2; ++r) {
      const double w = box(a, 0, r, 0) + box(a, 0, r, 1);
      if (w <= 0.0) continue;
      const double t1 = box(a, 0, r, 0) / w;
      const double t2 = box(a, 1, r, 0) / w;
      blocks.push_back({a, w, t1, t2, std::max(0.0, t1 + t2 - 1.0), std::min(t1, t2)});
    }
  const std::size_t nb = blocks.size();

  auto objective = [&](const std::vector<double>& x) {
    std::vector<std::vector<double>> w(2, std::vector<double>(4, 0.0));
    for (std::size_t k = 0; k < nb; ++k) {
      const Block& b = blocks[k];
      // Sequence index s1 + 2 s2.
      const double sigma[4] = {x[k], b.t2 - x[k], b.t1 - x[k], 1.0 - b.t1 - b.t2 + x[k]};
      for (int i = 0; i < 4; ++i) w[b.a][i] += b.weight * std::max(0.0, sigma[i]);
    }
    return capacity(w);
  };

  std::vector<double> lo(nb), hi(nb), best(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    lo[k] = blocks[k].lo;
    hi[k] = blocks[k].hi;
    best[k] = 0.5 * (lo[k] + hi[k]);
  }
  constexpr int kPoints = 9;
  double best_value = std::numeric_limits<double>::infinity();
  for (;;) {
    std::vector<double> step(nb);
    double widest = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      step[k] = (hi[k] - lo[k]) / (kPoints - 1);
      widest = std::max(widest, step[k]);
    }
    std::size_t total = 1;
    for (std::size_t k = 0; k < nb; ++k) total *= kPoints;
    std::vector<double> x(nb);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (std::size_t k = 0; k < nb; ++k) {
        x[k] = lo[k] + step[k] * static_cast<double>(rest % kPoints);
        rest /= kPoints;
      }
      const double v = objective(x);
      if (v < best_value) {
        best_value = v;
        best = x;
      }
    }
    if (widest <= resolution) break;
    // Zoom to +-2 cells around the incumbent, clamped to the block range.
    for (std::size_t k = 0; k < nb; ++k) {
      lo[k] = std::max(blocks[k].lo, best[k] - 2.0 * step[k]);
      hi[k] = std::min(blocks[k].hi, best[k] + 2.0 * step[k]);
    }
  }
  return best_value;
}

}  // namespace oracle
