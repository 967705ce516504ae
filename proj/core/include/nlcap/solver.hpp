#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "nlcap/hvspace.hpp"
#include "nlcap/nsbox.hpp"

namespace nlcap {

// Update rule for the HV blocks.
enum class StepSchedule {
  // sigma <- IPF(sigma * (q* / rho_x)^step0): alternating minimization of
  // the divergence at the capacity-achieving output q*.
  kAlternating,
  // Entropic mirror descent on the Danskin subgradient, normalized by its
  // largest entry, with step step0 or step0 / sqrt(t).
  kConstant,
  kInverseSqrt,
};

struct SolverOptions {
  int outer_max_iters = 20000;
  double inner_tol_bits = 1e-7;
  double step0 = 1.0;
  StepSchedule schedule = StepSchedule::kAlternating;
  // Mirror schedules only: cut the step by 20% after any increase of the
  // objective, regrow by 5% after a decrease (never above the schedule).
  bool adaptive_step = true;
  // Heavy-ball weight on the previous log-change of each block; 0 turns it
  // off. Reset whenever the objective rises.
  double momentum = 0.95;
  int stall_window = 100;
  double stall_rel = 1e-6;
  double feas_tol = 1e-8;
  // The solver itself is deterministic; the seed is recorded in reports so
  // that a run can be reproduced together with its sampling steps.
  std::uint64_t seed = 0;
  std::size_t sequence_cap = kDefaultSequenceCap;
  int ipf_max_sweeps = kDefaultIpfSweeps;
  // Called every `progress_every` outer iterations with (iteration, best).
  std::function<void(int, double)> progress;
  int progress_every = 1000;

  // Throws ValidationError when a field is out of range.
  void validate() const;
};

struct SolverReport {
  double D_bits = 0.0;  // best feasible objective
  HVBox hv;             // iterate attaining D_bits
  double feas_residual = 0.0;
  std::vector<double> history;  // objective at every outer iteration
  double inner_gap_bits = 0.0;  // BA certificate gap at the best iterate
  double initial_bits = 0.0;    // capacity of the starting product member
  std::vector<double> p_star;   // capacity-achieving input distribution
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

// min over the feasible set of the capacity of rho(s|a), started from the
// product member and driven by entropic mirror descent with IPF
// projections. Throws SignalingError / ValidationError for invalid boxes
// and CapacityLimitError when nS^nB exceeds the cap.
SolverReport nonlocal_capacity(const NSBox& box, const SolverOptions& opts = {});

// Same minimax with composite inputs x and one block per input. The HV-box
// in the report has a single Alice outcome and P(r=0|x) = 1.
SolverReport cbox_complexity(const CBox& cbox, const SolverOptions& opts = {});

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

// D <= C_nl <= D + 2 log2(D + 1) + 2 log2(e).
Bounds single_shot_bounds(double D_bits);

struct Corollary1Bounds {
  double lower = 0.0;  // -infinity when some P(r|a) = 0
  double upper = 0.0;
  double c_ch = 0.0;
  bool lower_defined = true;
  SolverReport cbox_report;
};

// c_ch + min_{a,r} log2 P(r|a) <= D <= c_ch - min_a max_b I(R;S|a,b).
Corollary1Bounds corollary1_bounds(const NSBox& box,
                                   const SolverOptions& opts = {});

// One-way protocol with finite shared randomness y and message k.
struct ProtocolSpec {
  int nY = 0, nA = 0, nR = 0, nK = 0, nB = 0, nS = 0;
  std::vector<double> rho_y;  // [y]
  std::vector<double> p_r;    // [y][a][r]       P(r|y,a)
  std::vector<double> p_k;    // [y][r][a][k]    P(k|y,r,a)
  std::vector<double> p_s;    // [y][b][k][s]    P(s|y,b,k)

  double r_given(int y, int a, int r) const {
    return p_r[(static_cast<std::size_t>(y) * nA + a) * nR + r];
  }
  double k_given(int y, int r, int a, int k) const {
    return p_k[((static_cast<std::size_t>(y) * nR + r) * nA + a) * nK + k];
  }
  double s_given(int y, int b, int k, int s) const {
    return p_s[((static_cast<std::size_t>(y) * nB + b) * nK + k) * nS + s];
  }
  // Row-stochastic checks within tol; throws ShapeError / ValidationError.
  void validate(double tol = 1e-9) const;
};

// Master protocol of an HV-box: y trivial, k = s, Bob answers s_b.
ProtocolSpec master_protocol(const HVBox& hv);

struct ProtocolCheck {
  bool ok = false;
  double max_residual = 0.0;
};

// Exact evaluation of sum_{k,y} P(s|y,b,k) P(k|y,r,a) P(r|y,a) rho(y)
// against the box, in L-infinity.
ProtocolCheck verify_protocol(const ProtocolSpec& proto, const NSBox& box,
                              double tol = 1e-9);

// max over P(a) of H(K|Y), in bits.
double protocol_cost(const ProtocolSpec& proto, double tol = 1e-10);

}  // namespace nlcap
