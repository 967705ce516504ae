#include "nlcap/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nlcap/errors.hpp"
#include "nlcap/infotheory.hpp"

namespace nlcap {
namespace {

struct Block {
  int input = 0;
  int r = 0;
  double weight = 0.0;
  std::vector<double> targets;  // [m * nS + s]
  std::vector<double> sigma;
  std::vector<std::uint8_t> support;
};

struct MinimaxOutcome {
  double best = std::numeric_limits<double>::infinity();
  double best_gap = 0.0;
  double best_feas = 0.0;
  double initial = 0.0;
  std::vector<std::vector<double>> best_sigma;
  std::vector<double> best_p;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

double block_residual(const SequenceSpace& space, const Block& blk,
                      std::vector<double>& scratch) {
  scratch.resize(blk.targets.size());
  space.coordinate_marginals(blk.sigma, scratch);
  double worst = 0.0;
  for (std::size_t i = 0; i < scratch.size(); ++i)
    worst = std::max(worst, std::abs(scratch[i] - blk.targets[i]));
  return worst * blk.weight;
}

constexpr double kNegligibleMass = 1e-250;

// Multiplicative updates on the sigma blocks. The objective is the capacity
// of rho(s|x) = sum_blocks weight * sigma, i.e. min_q max_x D(rho_x || q).
// With q fixed at the capacity-achieving output q*, the inputs decouple and
// sigma <- IPF(sigma * q* / rho_x) cannot raise any D(rho_x || q*), so the
// alternating step never raises the capacity. Its fixed points are optimal:
// each block then minimizes its own divergence and q* is the minimax output.
// The mirror schedules use the Danskin subgradient
// weight * p*(x) * ln(rho(s|x) / q*(s)) instead.
MinimaxOutcome minimize_capacity(int n_inputs, const SequenceSpace& space,
                                 std::vector<Block>& blocks,
                                 const SolverOptions& opts) {
  const std::size_t n = space.size();
  const std::size_t nx = static_cast<std::size_t>(n_inputs);
  MinimaxOutcome out;
  std::vector<double> w(nx * n), logratio(nx * n), scratch;
  std::vector<double> p_warm;
  std::vector<std::vector<double>> saved(blocks.size());

  double step0 = opts.step0;
  double checkpoint_best = std::numeric_limits<double>::infinity();
  double feas = 0.0;
  for (const auto& blk : blocks) feas = std::max(feas, block_residual(space, blk, scratch));

  // Multiplier on the step: cut whenever the objective rises, regrown
  // slowly otherwise. Keeps constant steps from oscillating near zero.
  double adapt = 1.0;
  double prev_objective = 0.0;
  // Heavy-ball term: the last log-change of each block, projection
  // included. Dropped whenever the objective rises.
  std::vector<std::vector<double>> velocity(blocks.size(), std::vector<double>(n, 0.0));
  bool restart = false;
  int t = 1;
  for (; t <= opts.outer_max_iters; ++t) {
    std::fill(w.begin(), w.end(), 0.0);
    for (const auto& blk : blocks) {
      double* row = w.data() + static_cast<std::size_t>(blk.input) * n;
      for (std::size_t i = 0; i < n; ++i) row[i] += blk.weight * blk.sigma[i];
    }
    // Normalize rows exactly; IPF leaves them within feas_tol of 1.
    for (std::size_t x = 0; x < nx; ++x) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += w[x * n + i];
      for (std::size_t i = 0; i < n; ++i) w[x * n + i] /= total;
    }
    const Channel channel(nx, n, w, 1e-6);

    CapacityOptions cap_opts;
    cap_opts.tol_bits = opts.inner_tol_bits;
    cap_opts.initial = p_warm;
    cap_opts.throw_on_limit = false;
    cap_opts.max_relaxation = 1e4;
    cap_opts.newton_steps = true;
    const CapacityResult cap = channel_capacity(channel, cap_opts);
    p_warm = cap.p_star;

    const double objective = cap.capacity_bits;
    out.history.push_back(objective);
    if (t == 1) out.initial = objective;
    const bool adaptive = opts.adaptive_step && opts.schedule != StepSchedule::kAlternating;
    if (t > 1 && objective > prev_objective) {
      restart = true;
      if (adaptive) adapt *= 0.8;
    } else if (adaptive) {
      adapt = std::min(1.0, adapt * 1.05);
    }
    prev_objective = objective;
    if (feas <= opts.feas_tol && objective < out.best) {
      out.best = objective;
      out.best_gap = cap.gap_bits;
      out.best_feas = feas;
      out.best_p = cap.p_star;
      out.best_sigma.resize(blocks.size());
      for (std::size_t k = 0; k < blocks.size(); ++k) out.best_sigma[k] = blocks[k].sigma;
    }
    if (opts.progress && opts.progress_every > 0 && t % opts.progress_every == 0)
      opts.progress(t, out.best);

    if (t % opts.stall_window == 0) {
      if (!(out.best < checkpoint_best)) {
        // No decrease over a full window: shrink the step.
        step0 *= 0.5;
        if (step0 < opts.step0 * 1e-6) {
          out.converged = true;
          break;
        }
      } else if (std::isfinite(checkpoint_best) &&
                 checkpoint_best - out.best <=
                     opts.stall_rel * checkpoint_best + 0.5 * opts.inner_tol_bits) {
        out.converged = true;
        break;
      }
      checkpoint_best = std::min(checkpoint_best, out.best);
    }
    if (out.best <= 0.5 * opts.inner_tol_bits) {
      // A channel with capacity within the inner tolerance of zero.
      out.converged = true;
      break;
    }
    if (t == opts.outer_max_iters) break;

    // Subgradient in nats, on the support of each row.
    for (std::size_t x = 0; x < nx; ++x) {
      const double* row = w.data() + x * n;
      double* lr = logratio.data() + x * n;
      for (std::size_t i = 0; i < n; ++i)
        lr[i] = row[i] > 0.0 ? std::log(row[i] / cap.q_star[i]) : 0.0;
    }
    double gmax = 0.0;
    for (const auto& blk : blocks) {
      const double scale = blk.weight * cap.p_star[blk.input];
      const double* lr = logratio.data() + static_cast<std::size_t>(blk.input) * n;
      for (std::size_t i = 0; i < n; ++i)
        if (blk.support[i]) gmax = std::max(gmax, std::abs(scale * lr[i]));
    }
    if (gmax <= 0.0) {
      out.converged = true;
      break;
    }
    // Mirror steps are normalized so the largest exponent moves by eta * gmax.
    const double base = opts.schedule == StepSchedule::kInverseSqrt
                            ? step0 / std::sqrt(static_cast<double>(t))
                            : step0;
    const double eta = adapt * base / gmax;

    if (restart) {
      for (auto& v : velocity) std::fill(v.begin(), v.end(), 0.0);
      restart = false;
    }
    const double beta = opts.momentum;

    double new_feas = 0.0;
    bool failed = false;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      auto& blk = blocks[k];
      saved[k] = blk.sigma;
      const double scale = opts.schedule == StepSchedule::kAlternating
                               ? step0
                               : eta * blk.weight * cap.p_star[blk.input];
      const double* lr = logratio.data() + static_cast<std::size_t>(blk.input) * n;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!blk.support[i]) continue;
        double v = blk.sigma[i] * std::exp(beta * velocity[k][i] - scale * lr[i]);
        // Entries this small never recover; left alone they turn subnormal
        // and slow every later sweep by an order of magnitude.
        if (v < kNegligibleMass) v = 0.0;
        blk.sigma[i] = v;
        total += v;
      }
      for (double& v : blk.sigma) v /= total;
      try {
        IpfResult proj = ipf_project(blk.sigma, blk.targets, space,
                                     opts.feas_tol, opts.ipf_max_sweeps);
        blk.sigma = std::move(proj.dist);
        if (beta > 0.0)
          for (std::size_t i = 0; i < n; ++i)
            velocity[k][i] = blk.sigma[i] > 0.0 && saved[k][i] > 0.0
                                 ? std::log(blk.sigma[i] / saved[k][i])
                                 : 0.0;
        new_feas = std::max(new_feas, proj.residual * blk.weight);
      } catch (const ConvergenceError&) {
        failed = true;
        break;
      }
    }
    if (failed) {
      for (std::size_t k = 0; k < blocks.size(); ++k)
        if (!saved[k].empty()) blocks[k].sigma = saved[k];
      for (auto& v : velocity) std::fill(v.begin(), v.end(), 0.0);
      step0 *= 0.5;
      continue;
    }
    feas = new_feas;
  }
  out.iterations = std::min(t, opts.outer_max_iters);
  if (out.best_sigma.empty()) {
    // No feasible iterate; report the starting point.
    out.best_sigma.resize(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) out.best_sigma[k] = blocks[k].sigma;
    out.converged = false;
  }
  return out;
}

}  // namespace

void SolverOptions::validate() const {
  if (outer_max_iters < 1 || !(inner_tol_bits > 0.0) || !(step0 > 0.0) ||
      stall_window < 1 || !(stall_rel > 0.0) || !(stall_rel < 1.0) ||
      !(feas_tol > 0.0) || !(momentum >= 0.0) || !(momentum < 1.0) ||
      ipf_max_sweeps < 1 || sequence_cap < 1)
    throw ValidationError("solver options out of range");
}

SolverReport nonlocal_capacity(const NSBox& box, const SolverOptions& opts) {
  opts.validate();
  require_valid(box);
  HVBox start = product_hvbox(box, opts.sequence_cap);
  const SequenceSpace& space = start.space();

  std::vector<Block> blocks;
  for (const auto& hb : start.blocks()) {
    Block blk;
    blk.input = hb.a;
    blk.r = hb.r;
    blk.weight = hb.weight;
    blk.targets = block_targets(box, hb.r, hb.a);
    blk.sigma = hb.sigma;
    blk.support = hb.support;
    blocks.push_back(std::move(blk));
  }

  auto outcome = minimize_capacity(start.nA(), space, blocks, opts);

  std::vector<HVBlock> hv_blocks;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    HVBlock hb;
    hb.r = blocks[k].r;
    hb.a = blocks[k].input;
    hb.weight = blocks[k].weight;
    hb.sigma = std::move(outcome.best_sigma[k]);
    hb.support = blocks[k].support;
    hv_blocks.push_back(std::move(hb));
  }

  SolverReport rep;
  rep.hv = HVBox(start.alice_marginal(), space, std::move(hv_blocks));
  rep.D_bits = std::isfinite(outcome.best) ? outcome.best : outcome.initial;
  rep.feas_residual = marginal_residual(rep.hv, box);
  rep.history = std::move(outcome.history);
  rep.inner_gap_bits = outcome.best_gap;
  rep.initial_bits = outcome.initial;
  rep.p_star = std::move(outcome.best_p);
  rep.iterations = outcome.iterations;
  rep.converged = outcome.converged && rep.feas_residual <= opts.feas_tol;
  rep.seed = opts.seed;
  return rep;
}

SolverReport cbox_complexity(const CBox& cbox, const SolverOptions& opts) {
  opts.validate();
  require_valid(cbox);
  SequenceSpace space(cbox.nB(), cbox.nS(), opts.sequence_cap);
  const int nx = cbox.n_inputs();
  const int nS = cbox.nS();

  std::vector<Block> blocks;
  for (int x = 0; x < nx; ++x) {
    Block blk;
    blk.input = x;
    blk.weight = 1.0;
    blk.targets.resize(static_cast<std::size_t>(cbox.nB()) * nS);
    for (int m = 0; m < cbox.nB(); ++m) {
      double row = 0.0;
      for (int s = 0; s < nS; ++s) row += cbox(x, m, s);
      for (int s = 0; s < nS; ++s)
        blk.targets[static_cast<std::size_t>(m) * nS + s] =
            std::max(0.0, cbox(x, m, s)) / row;
    }
    blk.sigma.assign(space.size(), 1.0);
    for (int m = 0; m < cbox.nB(); ++m)
      space.scale_slices(blk.sigma, m,
                         std::span<const double>(blk.targets)
                             .subspan(static_cast<std::size_t>(m) * nS, nS));
    blk.support.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
      blk.support[i] = blk.sigma[i] > 0.0 ? 1 : 0;
    blocks.push_back(std::move(blk));
  }

  auto outcome = minimize_capacity(nx, space, blocks, opts);

  std::vector<std::vector<double>> alice(nx, std::vector<double>{1.0});
  std::vector<HVBlock> hv_blocks;
  double feas = 0.0;
  std::vector<double> marg(blocks.front().targets.size());
  for (int x = 0; x < nx; ++x) {
    HVBlock hb;
    hb.r = 0;
    hb.a = x;
    hb.weight = 1.0;
    hb.sigma = std::move(outcome.best_sigma[x]);
    hb.support = blocks[x].support;
    space.coordinate_marginals(hb.sigma, marg);
    for (int m = 0; m < cbox.nB(); ++m)
      for (int s = 0; s < nS; ++s)
        feas = std::max(feas, std::abs(marg[static_cast<std::size_t>(m) * nS + s] -
                                       cbox(x, m, s)));
    hv_blocks.push_back(std::move(hb));
  }

  SolverReport rep;
  rep.hv = HVBox(std::move(alice), space, std::move(hv_blocks));
  rep.D_bits = std::isfinite(outcome.best) ? outcome.best : outcome.initial;
  rep.feas_residual = feas;
  rep.history = std::move(outcome.history);
  rep.inner_gap_bits = outcome.best_gap;
  rep.initial_bits = outcome.initial;
  rep.p_star = std::move(outcome.best_p);
  rep.iterations = outcome.iterations;
  rep.converged = outcome.converged && feas <= opts.feas_tol;
  rep.seed = opts.seed;
  return rep;
}

Bounds single_shot_bounds(double D_bits) {
  if (!(D_bits >= 0.0)) throw ValidationError("single-shot bounds need D >= 0");
  return {D_bits, D_bits + 2.0 * std::log2(D_bits + 1.0) +
                      2.0 * std::numbers::log2e};
}

Corollary1Bounds corollary1_bounds(const NSBox& box, const SolverOptions& opts) {
  require_valid(box);
  const auto& sh = box.shape();
  const auto marg = marginals(box);
  Corollary1Bounds out;
  out.cbox_report = cbox_complexity(to_cbox(box), opts);
  out.c_ch = out.cbox_report.D_bits;

  double min_log = std::numeric_limits<double>::infinity();
  for (int a = 0; a < sh.nA; ++a)
    for (int r = 0; r < sh.nR; ++r) {
      if (marg.alice[a][r] <= 0.0) {
        out.lower_defined = false;
        continue;
      }
      min_log = std::min(min_log, std::log2(marg.alice[a][r]));
    }
  out.lower = out.lower_defined ? out.c_ch + min_log
                                : -std::numeric_limits<double>::infinity();

  double min_a = std::numeric_limits<double>::infinity();
  for (int a = 0; a < sh.nA; ++a) {
    double max_b = 0.0;
    for (int b = 0; b < sh.nB; ++b)
      max_b = std::max(max_b, conditional_mutual_information(box, a, b));
    min_a = std::min(min_a, max_b);
  }
  out.upper = out.c_ch - min_a;
  return out;
}

void ProtocolSpec::validate(double tol) const {
  if (nY < 1 || nA < 1 || nR < 1 || nK < 1 || nB < 1 || nS < 1)
    throw ShapeError("protocol alphabets must be non-empty");
  const auto sz = [](std::initializer_list<int> dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  };
  if (rho_y.size() != sz({nY}) || p_r.size() != sz({nY, nA, nR}) ||
      p_k.size() != sz({nY, nR, nA, nK}) || p_s.size() != sz({nY, nB, nK, nS}))
    throw ShapeError("protocol table sizes do not match the alphabets");
  const auto check_rows = [tol](const std::vector<double>& t, std::size_t len,
                                const char* what) {
    for (std::size_t base = 0; base < t.size(); base += len) {
      double total = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        if (!(t[base + i] >= -tol))
          throw ValidationError(std::string(what) + " has a negative entry");
        total += t[base + i];
      }
      if (std::abs(total - 1.0) > tol)
        throw ValidationError(std::string(what) + " has a row not summing to 1");
    }
  };
  check_rows(rho_y, rho_y.size(), "rho(y)");
  check_rows(p_r, static_cast<std::size_t>(nR), "P(r|y,a)");
  check_rows(p_k, static_cast<std::size_t>(nK), "P(k|y,r,a)");
  check_rows(p_s, static_cast<std::size_t>(nS), "P(s|y,b,k)");
}

ProtocolSpec master_protocol(const HVBox& hv) {
  const auto& space = hv.space();
  if (space.size() > (std::size_t{1} << 16))
    throw CapacityLimitError("master protocol tables are limited to 2^16 messages");
  ProtocolSpec proto;
  proto.nY = 1;
  proto.nA = hv.nA();
  proto.nR = hv.nR();
  proto.nK = static_cast<int>(space.size());
  proto.nB = space.length();
  proto.nS = space.alphabet();
  proto.rho_y = {1.0};
  proto.p_r.assign(static_cast<std::size_t>(proto.nA) * proto.nR, 0.0);
  for (int a = 0; a < proto.nA; ++a)
    for (int r = 0; r < proto.nR; ++r)
      proto.p_r[static_cast<std::size_t>(a) * proto.nR + r] = hv.alice_marginal()[a][r];
  // Alice's message is the whole sequence; inputs with P(r|a) = 0 get an
  // arbitrary valid row.
  proto.p_k.assign(static_cast<std::size_t>(proto.nR) * proto.nA * proto.nK, 0.0);
  for (int r = 0; r < proto.nR; ++r)
    for (int a = 0; a < proto.nA; ++a) {
      double* row = proto.p_k.data() +
                    (static_cast<std::size_t>(r) * proto.nA + a) * proto.nK;
      if (const HVBlock* blk = hv.find(r, a)) {
        std::copy(blk->sigma.begin(), blk->sigma.end(), row);
      } else {
        row[0] = 1.0;
      }
    }
  proto.p_s.assign(static_cast<std::size_t>(proto.nB) * proto.nK * proto.nS, 0.0);
  for (int b = 0; b < proto.nB; ++b)
    for (int k = 0; k < proto.nK; ++k)
      proto.p_s[(static_cast<std::size_t>(b) * proto.nK + k) * proto.nS +
                space.digit(static_cast<std::size_t>(k), b)] = 1.0;
  return proto;
}

ProtocolCheck verify_protocol(const ProtocolSpec& proto, const NSBox& box,
                              double tol) {
  proto.validate();
  const auto& sh = box.shape();
  if (sh.nA != proto.nA || sh.nB != proto.nB || sh.nR != proto.nR ||
      sh.nS != proto.nS)
    throw ShapeError("protocol alphabets do not match the box shape");
  ProtocolCheck out;
  for (int a = 0; a < sh.nA; ++a)
    for (int b = 0; b < sh.nB; ++b)
      for (int r = 0; r < sh.nR; ++r)
        for (int s = 0; s < sh.nS; ++s) {
          double v = 0.0;
          for (int y = 0; y < proto.nY; ++y) {
            const double pry = proto.rho_y[y] * proto.r_given(y, a, r);
            if (pry == 0.0) continue;
            double inner = 0.0;
            for (int k = 0; k < proto.nK; ++k)
              inner += proto.s_given(y, b, k, s) * proto.k_given(y, r, a, k);
            v += pry * inner;
          }
          out.max_residual = std::max(out.max_residual, std::abs(v - box(a, b, r, s)));
        }
  out.ok = out.max_residual <= tol;
  return out;
}

namespace {

// H(K|Y) in nats and its gradient with respect to P(a).
double conditional_message_entropy(const ProtocolSpec& proto,
                                   std::span<const double> pa,
                                   std::vector<double>& grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> pk(proto.nK);
  // P(k|y,a) = sum_r P(k|y,r,a) P(r|y,a)
  std::vector<double> pk_a(static_cast<std::size_t>(proto.nA) * proto.nK);
  double h = 0.0;
  for (int y = 0; y < proto.nY; ++y) {
    std::fill(pk_a.begin(), pk_a.end(), 0.0);
    for (int a = 0; a < proto.nA; ++a)
      for (int r = 0; r < proto.nR; ++r) {
        const double pr = proto.r_given(y, a, r);
        if (pr == 0.0) continue;
        for (int k = 0; k < proto.nK; ++k)
          pk_a[static_cast<std::size_t>(a) * proto.nK + k] += pr * proto.k_given(y, r, a, k);
      }
    std::fill(pk.begin(), pk.end(), 0.0);
    for (int a = 0; a < proto.nA; ++a)
      for (int k = 0; k < proto.nK; ++k)
        pk[k] += pa[a] * pk_a[static_cast<std::size_t>(a) * proto.nK + k];
    double hy = 0.0;
    for (double v : pk)
      if (v > 0.0) hy -= v * std::log(v);
    h += proto.rho_y[y] * hy;
    // dH/dP(a) = -sum_k P(k|y,a) (ln P(k|y) + 1)
    for (int a = 0; a < proto.nA; ++a) {
      double g = 0.0;
      for (int k = 0; k < proto.nK; ++k) {
        const double v = pk_a[static_cast<std::size_t>(a) * proto.nK + k];
        if (v > 0.0) g -= v * (std::log(pk[k]) + 1.0);
      }
      grad[a] += proto.rho_y[y] * g;
    }
  }
  return h;
}

}  // namespace

double protocol_cost(const ProtocolSpec& proto, double tol) {
  proto.validate();
  const int na = proto.nA;
  std::vector<double> pa(na, 1.0 / na), grad(na), best_pa = pa;
  double best = -1.0;
  double eta = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const double h = conditional_message_entropy(proto, pa, grad);
    if (h > best) {
      best = h;
      best_pa = pa;
    }
    // Concavity: H(p') <= H(p) + <grad, p' - p>, so the linearized gap
    // max_a grad[a] - <grad, p> bounds the suboptimality.
    double mean = 0.0, gmax = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < na; ++a) {
      mean += pa[a] * grad[a];
      gmax = std::max(gmax, grad[a]);
    }
    if (gmax - mean <= tol * std::numbers::ln2) return std::max(0.0, best / std::numbers::ln2);
    double total = 0.0;
    for (int a = 0; a < na; ++a) {
      pa[a] *= std::exp(eta * (grad[a] - gmax));
      total += pa[a];
    }
    for (double& v : pa) v /= total;
    if (h < best) {
      pa = best_pa;
      eta *= 0.5;
    }
  }
  throw ConvergenceError("protocol_cost did not converge", tol);
}

}  // namespace nlcap
