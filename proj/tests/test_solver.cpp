#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "nlcap/errors.hpp"
#include "nlcap/quantum.hpp"
#include "nlcap/solver.hpp"
#include "oracles.hpp"

using namespace nlcap;

namespace {

const BoxShape k2222{2, 2, 2, 2};

NSBox werner_cube13(double gamma) {
  const auto m = cube13_measurements();
  return werner_box(gamma, m, m);
}

}  // namespace

TEST_CASE("solver options are validated") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());
  o.stall_rel = 1.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.step0 = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.outer_max_iters = 0;
  CHECK_THROWS_AS(nonlocal_capacity(pr_box(), o), ValidationError);
}

TEST_CASE("PR box has nonlocal capacity one bit") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = nonlocal_capacity(pr_box());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(std::abs(rep.D_bits - 1.0) <= 1e-4);
  CHECK(secs < 1.0);
  CHECK(rep.feas_residual <= 1e-8);
  CHECK(rep.converged);
  CHECK(rep.p_star.size() == 2);
}

TEST_CASE("local boxes cost nothing") {
  const NSBox f = local_deterministic_box(
      k2222, [](int a) { return a; }, [](int b) { return 1 - b; });
  CHECK(nonlocal_capacity(f).D_bits <= 1e-4);
  const NSBox g = local_deterministic_box(
      BoxShape{3, 2, 3, 2}, [](int a) { return (a + 1) % 3; }, [](int) { return 0; });
  CHECK(nonlocal_capacity(g).D_bits <= 1e-4);
  const std::vector<NSBox> boxes{f, local_deterministic_box(
                                        k2222, [](int) { return 1; }, [](int b) { return b; })};
  const std::vector<double> w{0.4, 0.6};
  CHECK(nonlocal_capacity(convex_mixture(boxes, w)).D_bits <= 1e-4);
}

TEST_CASE("invalid boxes are refused before solving") {
  const NSBox sig = pr_box().with_entry(0, 0, 0, 0, 0.6).with_entry(0, 0, 1, 1, 0.4);
  CHECK_THROWS_AS(nonlocal_capacity(sig), SignalingError);
  SolverOptions o;
  o.sequence_cap = 2;
  CHECK_THROWS_AS(nonlocal_capacity(pr_box(), o), CapacityLimitError);
}

TEST_CASE("small random boxes agree with the grid oracle") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 6; ++rep) {
    const NSBox box = oracle::random_box_2222(rng, rep >= 2);
    const auto res = nonlocal_capacity(box);
    const double ref = oracle::grid_nonlocal_capacity(box);
    CHECK(std::abs(res.D_bits - ref) <= 1e-3);
    CHECK(res.D_bits <= res.initial_bits + 1e-12);
    CHECK(res.feas_residual <= 1e-8);
  }
}

TEST_CASE("report bookkeeping") {
  std::mt19937_64 rng(4);
  const NSBox box = oracle::random_box_2222(rng);
  SolverOptions o;
  int calls = 0;
  o.progress_every = 10;
  o.progress = [&](int, double) { ++calls; };
  o.seed = 77;
  const auto rep = nonlocal_capacity(box, o);
  CHECK(rep.seed == 77);
  CHECK(static_cast<int>(rep.history.size()) == rep.iterations);
  CHECK(calls == rep.iterations / 10);
  double lowest = rep.history.front();
  for (double v : rep.history) lowest = std::min(lowest, v);
  CHECK(rep.D_bits == lowest);
  CHECK(rep.D_bits >= 0.0);
  CHECK(rep.D_bits <= rep.initial_bits);
  CHECK(rep.inner_gap_bits >= 0.0);
  CHECK(marginal_residual(rep.hv, box) == rep.feas_residual);
}

TEST_CASE("C-box complexity") {
  const auto pr = cbox_complexity(to_cbox(pr_box()));
  CHECK(std::abs(pr.D_bits - 2.0) <= 1e-4);
  const auto w0 = cbox_complexity(to_cbox(werner_cube13(0.0)));
  CHECK(std::abs(w0.D_bits) <= 1e-6);
}

TEST_CASE("single-shot bounds") {
  const auto b0 = single_shot_bounds(0.0);
  CHECK(b0.lower == 0.0);
  CHECK(b0.upper == doctest::Approx(2.885390081777927).epsilon(1e-14));
  const auto b1 = single_shot_bounds(1.0);
  CHECK(b1.lower == 1.0);
  CHECK(b1.upper == doctest::Approx(5.885390081777927).epsilon(1e-14));
  CHECK_THROWS(single_shot_bounds(-0.1));
}

TEST_CASE("C-box bounds on PR and Werner gamma = 0") {
  const auto pr = corollary1_bounds(pr_box());
  CHECK(pr.lower_defined);
  CHECK(pr.c_ch == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(std::abs(pr.lower - 1.0) <= 1e-4);
  CHECK(std::abs(pr.upper - 1.0) <= 1e-4);

  const auto w0 = corollary1_bounds(werner_cube13(0.0));
  CHECK(std::abs(w0.lower + 1.0) <= 1e-6);
  CHECK(std::abs(w0.upper) <= 1e-6);

  const NSBox det = local_deterministic_box(
      k2222, [](int) { return 0; }, [](int) { return 1; });
  const auto d = corollary1_bounds(det);
  CHECK_FALSE(d.lower_defined);
  CHECK(std::isinf(d.lower));
  CHECK(d.upper >= -1e-6);
}

TEST_CASE("Werner boxes below the threshold are local") {
  const auto rep = nonlocal_capacity(werner_cube13(0.5));
  CHECK(rep.D_bits <= 1e-3);
  CHECK(rep.converged);
  CHECK(rep.iterations < 500);
}

TEST_CASE("mirror steps without back-off reach the same values on small boxes") {
  SolverOptions o;
  o.schedule = StepSchedule::kConstant;
  o.adaptive_step = false;
  CHECK(std::abs(nonlocal_capacity(pr_box(), o).D_bits - 1.0) <= 1e-4);
  std::mt19937_64 rng(57);
  const NSBox box = oracle::random_box_2222(rng, true);
  CHECK(std::abs(nonlocal_capacity(box, o).D_bits - nonlocal_capacity(box).D_bits) <= 1e-4);
}

TEST_CASE("alternating updates never raise the capacity without momentum") {
  std::mt19937_64 rng(59);
  SolverOptions o;
  o.momentum = 0.0;
  o.outer_max_iters = 200;
  for (const NSBox& box : {oracle::random_box_2222(rng, true), werner_cube13(0.8)}) {
    const auto rep = nonlocal_capacity(box, o);
    for (std::size_t t = 1; t < rep.history.size(); ++t)
      CHECK(rep.history[t] <= rep.history[t - 1] + 2 * o.inner_tol_bits);
  }
}

TEST_CASE("the inverse square root schedule also reaches the PR value") {
  SolverOptions o;
  o.schedule = StepSchedule::kInverseSqrt;
  CHECK(std::abs(nonlocal_capacity(pr_box(), o).D_bits - 1.0) <= 1e-4);
  std::mt19937_64 rng(55);
  const NSBox box = oracle::random_box_2222(rng, true);
  CHECK(std::abs(nonlocal_capacity(box, o).D_bits - oracle::grid_nonlocal_capacity(box)) <=
        1e-3);
}
