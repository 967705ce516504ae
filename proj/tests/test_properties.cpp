#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "nlcap/hvspace.hpp"
#include "nlcap/infotheory.hpp"
#include "nlcap/quantum.hpp"
#include "nlcap/solver.hpp"
#include "oracles.hpp"

using namespace nlcap;

namespace {

// Box with inputs and outcomes renamed: P'(a,b,r,s) = P(pa[a], pb[b], pr[r], ps[s]).
NSBox relabel(const NSBox& box, const std::vector<int>& pa, const std::vector<int>& pb,
              const std::vector<int>& pr, const std::vector<int>& ps) {
  const auto& sh = box.shape();
  std::vector<double> p(sh.size());
  for (int a = 0; a < sh.nA; ++a)
    for (int b = 0; b < sh.nB; ++b)
      for (int r = 0; r < sh.nR; ++r)
        for (int s = 0; s < sh.nS; ++s)
          p[box.index(a, b, r, s)] = box(pa[a], pb[b], pr[r], ps[s]);
  return NSBox(sh, std::move(p));
}

std::vector<int> shuffled(int n, std::mt19937_64& rng) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

// Werner box on a few generic axes: small enough for unit tests, with
// nonzero capacity at high visibility.
NSBox small_werner(double gamma) {
  const std::vector<BlochVector> alice{{0, 0, 1}, {1, 0, 0}, BlochVector::normalized(1, 1, 1)};
  const std::vector<BlochVector> bob{BlochVector::normalized(1, 0, 1),
                                     BlochVector::normalized(1, 0, -1),
                                     BlochVector::normalized(0, 1, 1)};
  return werner_box(gamma, alice, bob);
}

}  // namespace

TEST_CASE("capacity is invariant under relabeling") {
  std::mt19937_64 rng(31);
  std::vector<NSBox> boxes{oracle::random_box_2222(rng), oracle::random_box_2222(rng, true),
                           oracle::random_box_2222(rng, true), small_werner(0.95)};
  for (const NSBox& box : boxes) {
    const auto& sh = box.shape();
    const double base = nonlocal_capacity(box).D_bits;
    for (int rep = 0; rep < 2; ++rep) {
      const NSBox moved = relabel(box, shuffled(sh.nA, rng), shuffled(sh.nB, rng),
                                  shuffled(sh.nR, rng), shuffled(sh.nS, rng));
      REQUIRE(verify_nonsignaling(moved).ok);
      CHECK(std::abs(nonlocal_capacity(moved).D_bits - base) <= 1e-4);
    }
  }
}

TEST_CASE("mixing in uniform noise never raises the capacity") {
  const NSBox box = small_werner(1.0);
  const NSBox noise = small_werner(0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double w : {0.0, 0.1, 0.2, 0.35, 0.5}) {
    const std::vector<NSBox> parts{box, noise};
    const std::vector<double> weights{1.0 - w, w};
    const double d = nonlocal_capacity(convex_mixture(parts, weights)).D_bits;
    CHECK(d <= prev + 1e-4);
    prev = d;
  }
}

TEST_CASE("every solver iterate stays feasible") {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 3; ++rep) {
    const NSBox box = oracle::random_box_2222(rng, true);
    const auto res = nonlocal_capacity(box);
    CHECK(res.feas_residual <= 1e-8);
    // Block-level residual: IPF holds marginals to its own tolerance.
    for (const auto& blk : res.hv.blocks()) {
      const auto targets = block_targets(box, blk.r, blk.a);
      std::vector<double> got(targets.size());
      res.hv.space().coordinate_marginals(blk.sigma, got);
      for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(std::abs(got[i] - targets[i]) <= 1e-8);
    }
  }
}

TEST_CASE("IPF restores marginals after a perturbation") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  const auto axes = cube13_measurements();
  const NSBox box = werner_box(0.85, axes, axes);
  const HVBox hv = product_hvbox(box);
  for (const auto& blk : hv.blocks()) {
    auto sigma = blk.sigma;
    double t = 0.0;
    for (double& v : sigma) t += (v *= u(rng));
    for (double& v : sigma) v /= t;
    const auto targets = block_targets(box, blk.r, blk.a);
    const auto res = ipf_project(sigma, targets, hv.space());
    CHECK(res.residual <= 1e-10);
    for (std::size_t k = 1; k < res.residual_history.size(); ++k)
      CHECK(res.residual_history[k] <= res.residual_history[k - 1] * (1 + 1e-9) + 1e-16);
  }
}

TEST_CASE("capacity certificates bracket the oracle on the solver's channels") {
  std::mt19937_64 rng(43);
  const NSBox box = oracle::random_box_2222(rng, true);
  const auto rep = nonlocal_capacity(box);
  const Channel w = channel_of(rep.hv);
  CapacityOptions opts;
  opts.record_history = true;
  const auto cap = channel_capacity(w, opts);
  std::vector<std::vector<double>> rows(w.n_inputs());
  for (std::size_t x = 0; x < w.n_inputs(); ++x) rows[x].assign(w.row(x).begin(), w.row(x).end());
  const double ref = oracle::capacity(rows, 1e-12);
  for (std::size_t t = 0; t < cap.lower_history.size(); ++t) {
    CHECK(cap.lower_history[t] <= ref + 1e-10);
    CHECK(cap.upper_history[t] >= ref - 1e-10);
  }
  CHECK(std::abs(cap.capacity_bits - rep.D_bits) <= 1e-6);
}

TEST_CASE("single-shot bounds are ordered") {
  for (double d = 0.0; d <= 20.0; d += 0.37) {
    const auto b = single_shot_bounds(d);
    CHECK(b.lower <= b.upper);
    CHECK(b.lower == d);
  }
}

TEST_CASE("C-box bounds sandwich the capacity on small boxes") {
  std::mt19937_64 rng(47);
  std::vector<NSBox> boxes{pr_box(), small_werner(0.9), oracle::random_box_2222(rng, true)};
  for (const NSBox& box : boxes) {
    const double d = nonlocal_capacity(box).D_bits;
    const auto b = corollary1_bounds(box);
    REQUIRE(b.lower_defined);
    CHECK(b.lower - 1e-3 <= d);
    CHECK(d <= b.upper + 1e-3);
  }
}

TEST_CASE("master protocol reproduces a feasible box exactly") {
  std::mt19937_64 rng(53);
  for (int rep = 0; rep < 3; ++rep) {
    const NSBox box = oracle::random_box_2222(rng, true);
    const auto res = nonlocal_capacity(box);
    const auto chk = verify_protocol(master_protocol(res.hv), box, 1e-8);
    CHECK(chk.max_residual <= res.feas_residual + 1e-12);
  }
}
