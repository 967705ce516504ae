#include "nlcap/hvspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlcap/errors.hpp"

namespace nlcap {

SequenceSpace::SequenceSpace(int length, int alphabet, std::size_t cap)
    : length_(length), alphabet_(alphabet) {
  if (length < 1 || alphabet < 1)
    throw ShapeError("sequence space needs length and alphabet >= 1");
  std::size_t n = 1;
  strides_.reserve(length);
  for (int m = 0; m < length; ++m) {
    strides_.push_back(n);
    if (n > cap / static_cast<std::size_t>(alphabet))
      throw CapacityLimitError("sequence space " + std::to_string(alphabet) +
                               "^" + std::to_string(length) +
                               " exceeds the cap of " + std::to_string(cap));
    n *= static_cast<std::size_t>(alphabet);
  }
  size_ = n;
}

std::size_t SequenceSpace::encode(std::span<const int> seq) const {
  if (seq.size() != static_cast<std::size_t>(length_))
    throw ShapeError("sequence length mismatch");
  std::size_t idx = 0;
  for (int m = 0; m < length_; ++m) {
    if (seq[m] < 0 || seq[m] >= alphabet_)
      throw ShapeError("sequence symbol out of range");
    idx += static_cast<std::size_t>(seq[m]) * strides_[m];
  }
  return idx;
}

std::vector<int> SequenceSpace::decode(std::size_t idx) const {
  if (idx >= size_) throw ShapeError("sequence index out of range");
  std::vector<int> seq(length_);
  for (int m = 0; m < length_; ++m) seq[m] = digit(idx, m);
  return seq;
}

namespace {

// Sum of a contiguous run with four partial sums; fixed order, so the
// result is reproducible.
double run_sum(const double* p, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += p[j];
    s1 += p[j + 1];
    s2 += p[j + 2];
    s3 += p[j + 3];
  }
  for (; j < n; ++j) s0 += p[j];
  return (s0 + s1) + (s2 + s3);
}

double scale_run(double* p, std::size_t n, double f) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    p[j] *= f;
    p[j + 1] *= f;
    p[j + 2] *= f;
    p[j + 3] *= f;
    s0 += p[j];
    s1 += p[j + 1];
    s2 += p[j + 2];
    s3 += p[j + 3];
  }
  for (; j < n; ++j) {
    p[j] *= f;
    s0 += p[j];
  }
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

void SequenceSpace::slice_sums(std::span<const double> dist, int m,
                               std::span<double> out) const {
  const std::size_t st = strides_[m];
  const std::size_t ns = static_cast<std::size_t>(alphabet_);
  const std::size_t period = st * ns;
  std::fill(out.begin(), out.end(), 0.0);
  if (st == 1) {
    for (std::size_t base = 0; base < size_; base += ns)
      for (std::size_t v = 0; v < ns; ++v) out[v] += dist[base + v];
    return;
  }
  for (std::size_t base = 0; base < size_; base += period)
    for (std::size_t v = 0; v < ns; ++v) out[v] += run_sum(dist.data() + base + v * st, st);
}

void SequenceSpace::coordinate_marginals(std::span<const double> dist,
                                         std::span<double> out) const {
  // Read off the most significant digit, then fold it away and repeat on
  // the shorter table: about 2 N additions for all coordinates.
  const std::size_t ns = static_cast<std::size_t>(alphabet_);
  thread_local std::vector<double> folded;
  const double* src = dist.data();
  for (int m = length_ - 1; m >= 0; --m) {
    const std::size_t st = strides_[m];
    for (std::size_t v = 0; v < ns; ++v)
      out[static_cast<std::size_t>(m) * ns + v] = run_sum(src + v * st, st);
    if (m == 0) break;
    if (folded.size() < st) folded.resize(st);
    double* dst = folded.data();
    if (dst != src) std::copy(src, src + st, dst);
    for (std::size_t v = 1; v < ns; ++v) {
      const double* p = src + v * st;
      for (std::size_t j = 0; j < st; ++j) dst[j] += p[j];
    }
    src = dst;
  }
}

void SequenceSpace::scale_slices(std::span<double> dist, int m,
                                 std::span<const double> factors) const {
  const std::size_t st = strides_[m];
  const std::size_t ns = static_cast<std::size_t>(alphabet_);
  const std::size_t period = st * ns;
  for (std::size_t base = 0; base < size_; base += period)
    for (std::size_t v = 0; v < ns; ++v) {
      double* p = dist.data() + base + v * st;
      const double f = factors[v];
      for (std::size_t j = 0; j < st; ++j) p[j] *= f;
    }
}

HVBox::HVBox(std::vector<std::vector<double>> alice_marginal,
             SequenceSpace space, std::vector<HVBlock> blocks)
    : alice_marginal_(std::move(alice_marginal)),
      space_(std::move(space)),
      blocks_(std::move(blocks)) {
  if (alice_marginal_.empty() || alice_marginal_[0].empty())
    throw ShapeError("HV-box needs at least one Alice input and outcome");
  const std::size_t nr = alice_marginal_[0].size();
  for (const auto& row : alice_marginal_) {
    if (row.size() != nr) throw ShapeError("ragged Alice marginal table");
    double total = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw ValidationError("negative Alice marginal");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("Alice marginal row is not normalized");
  }
  for (auto& blk : blocks_) {
    if (blk.a < 0 || blk.a >= nA() || blk.r < 0 || blk.r >= nR())
      throw ShapeError("HV-box block index out of range");
    if (blk.sigma.size() != space_.size())
      throw ShapeError("HV-box block has the wrong sequence count");
    if (blk.support.empty()) {
      blk.support.resize(blk.sigma.size());
      for (std::size_t i = 0; i < blk.sigma.size(); ++i)
        blk.support[i] = blk.sigma[i] > 0.0 ? 1 : 0;
    }
    if (blk.support.size() != blk.sigma.size())
      throw ShapeError("HV-box support mask has the wrong size");
    blk.weight = alice_marginal_[blk.a][blk.r];
    double total = 0.0;
    for (std::size_t i = 0; i < blk.sigma.size(); ++i) {
      const double v = blk.sigma[i];
      if (!(v >= 0.0)) throw ValidationError("HV-box block has a negative entry");
      if (v != 0.0 && !blk.support[i])
        throw ValidationError("HV-box block has mass outside its support");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("HV-box block (r=" + std::to_string(blk.r) +
                            ", a=" + std::to_string(blk.a) + ") sums to " +
                            std::to_string(total));
  }
  for (int a = 0; a < nA(); ++a)
    for (int r = 0; r < nR(); ++r)
      if (alice_marginal_[a][r] > 0.0 && find(r, a) == nullptr)
        throw ShapeError("HV-box is missing the block for r=" +
                         std::to_string(r) + ", a=" + std::to_string(a));
}

const HVBlock* HVBox::find(int r, int a) const {
  for (const auto& blk : blocks_)
    if (blk.r == r && blk.a == a) return &blk;
  return nullptr;
}

std::vector<double> block_targets(const NSBox& box, int r, int a) {
  const auto& sh = box.shape();
  double pra = 0.0;
  for (int s = 0; s < sh.nS; ++s) pra += box(a, 0, r, s);
  if (!(pra > 0.0)) throw ValidationError("block targets need P(r|a) > 0");
  std::vector<double> t(static_cast<std::size_t>(sh.nB) * sh.nS);
  for (int m = 0; m < sh.nB; ++m) {
    double row = 0.0;
    for (int s = 0; s < sh.nS; ++s) row += box(a, m, r, s);
    // Normalize each coordinate separately so that every target is an
    // exact distribution even when the box is nonsignaling only to 1e-9.
    for (int s = 0; s < sh.nS; ++s)
      t[static_cast<std::size_t>(m) * sh.nS + s] = std::max(0.0, box(a, m, r, s)) / row;
  }
  return t;
}

HVBox product_hvbox(const NSBox& box, std::size_t cap) {
  const auto& sh = box.shape();
  SequenceSpace space(sh.nB, sh.nS, cap);
  const auto marg = marginals(box);
  std::vector<HVBlock> blocks;
  for (int a = 0; a < sh.nA; ++a) {
    for (int r = 0; r < sh.nR; ++r) {
      if (!(marg.alice[a][r] > 0.0)) continue;
      HVBlock blk;
      blk.r = r;
      blk.a = a;
      blk.weight = marg.alice[a][r];
      const auto t = block_targets(box, r, a);
      blk.sigma.assign(space.size(), 1.0);
      for (int m = 0; m < sh.nB; ++m)
        space.scale_slices(blk.sigma, m,
                           std::span<const double>(t).subspan(
                               static_cast<std::size_t>(m) * sh.nS, sh.nS));
      blk.support.resize(space.size());
      for (std::size_t i = 0; i < space.size(); ++i)
        blk.support[i] = blk.sigma[i] > 0.0 ? 1 : 0;
      blocks.push_back(std::move(blk));
    }
  }
  return HVBox(marg.alice, std::move(space), std::move(blocks));
}

double marginal_residual(const HVBox& hv, const NSBox& box) {
  const auto& sh = box.shape();
  const auto& space = hv.space();
  if (hv.nA() != sh.nA || hv.nR() != sh.nR || space.length() != sh.nB ||
      space.alphabet() != sh.nS)
    throw ShapeError("HV-box and NS-box shapes disagree");
  std::vector<double> marg(static_cast<std::size_t>(sh.nB) * sh.nS);
  double worst = 0.0;
  for (int a = 0; a < sh.nA; ++a) {
    for (int r = 0; r < sh.nR; ++r) {
      const HVBlock* blk = hv.find(r, a);
      if (blk != nullptr) {
        space.coordinate_marginals(blk->sigma, marg);
      } else {
        std::fill(marg.begin(), marg.end(), 0.0);
      }
      const double w = hv.alice_marginal()[a][r];
      for (int m = 0; m < sh.nB; ++m)
        for (int s = 0; s < sh.nS; ++s)
          worst = std::max(
              worst, std::abs(w * marg[static_cast<std::size_t>(m) * sh.nS + s] -
                              box(a, m, r, s)));
    }
  }
  return worst;
}

namespace {

double max_marginal_error(const SequenceSpace& space, std::span<const double> dist,
                          std::span<const double> targets,
                          std::vector<double>& scratch) {
  scratch.resize(targets.size());
  space.coordinate_marginals(dist, scratch);
  double worst = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i)
    worst = std::max(worst, std::abs(scratch[i] - targets[i]));
  return worst;
}

// Scales the s_m slices and returns the slice sums of s_{m+1} of the
// result in the same pass. Digit m+1 is constant on each period of digit m.
void scale_and_sum_next(const SequenceSpace& space, std::span<double> dist, int m,
                        std::span<const double> factors, std::span<double> next) {
  const std::size_t ns = static_cast<std::size_t>(space.alphabet());
  const std::size_t st = space.stride(m);
  const std::size_t period = st * ns;
  std::fill(next.begin(), next.end(), 0.0);
  std::size_t d = 0;
  for (std::size_t base = 0; base < space.size(); base += period) {
    double acc = 0.0;
    if (st == 1) {
      for (std::size_t v = 0; v < ns; ++v) {
        dist[base + v] *= factors[v];
        acc += dist[base + v];
      }
    } else {
      for (std::size_t v = 0; v < ns; ++v)
        acc += scale_run(dist.data() + base + v * st, st, factors[v]);
    }
    next[d] += acc;
    if (++d == ns) d = 0;
  }
}

}  // namespace

IpfResult ipf_project(std::span<const double> block,
                      std::span<const double> targets,
                      const SequenceSpace& space, double tol, int max_sweeps) {
  const int nb = space.length();
  const int ns = space.alphabet();
  if (block.size() != space.size())
    throw ShapeError("IPF block size does not match the sequence space");
  if (targets.size() != static_cast<std::size_t>(nb) * ns)
    throw ShapeError("IPF targets must have nB * nS entries");
  for (int m = 0; m < nb; ++m) {
    double total = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double t = targets[static_cast<std::size_t>(m) * ns + s];
      if (!(t >= 0.0)) throw ValidationError("IPF target has a negative entry");
      total += t;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("IPF target for coordinate " + std::to_string(m) +
                            " is not normalized");
  }

  IpfResult res;
  res.dist.assign(block.begin(), block.end());
  for (double v : res.dist)
    if (!(v >= 0.0)) throw ValidationError("IPF block has a negative entry");

  std::vector<double> scratch;
  res.residual = max_marginal_error(space, res.dist, targets, scratch);
  bool zero_rule_ok = true;
  for (std::size_t i = 0; i < targets.size() && zero_rule_ok; ++i)
    if (targets[i] == 0.0 && scratch[i] != 0.0) zero_rule_ok = false;
  if (res.residual <= tol && zero_rule_ok) return res;

  // `scratch` holds all coordinate marginals of the current state; its
  // first slice seeds coordinate 0 of the next sweep.
  std::vector<double> current(scratch.begin(), scratch.begin() + ns);
  std::vector<double> factors(ns), next(ns);
  while (true) {
    if (res.sweeps >= max_sweeps)
      throw ConvergenceError("IPF did not reach tol " + std::to_string(tol) +
                                 " in " + std::to_string(max_sweeps) + " sweeps",
                             res.residual);
    for (int m = 0; m < nb; ++m) {
      for (int s = 0; s < ns; ++s) {
        const double t = targets[static_cast<std::size_t>(m) * ns + s];
        if (t == 0.0) {
          factors[s] = 0.0;
        } else if (current[s] > 0.0) {
          factors[s] = t / current[s];
        } else {
          throw SupportError("IPF slice s_" + std::to_string(m) + " = " +
                             std::to_string(s) +
                             " has positive target but no mass");
        }
      }
      if (m + 1 < nb) {
        scale_and_sum_next(space, res.dist, m, factors, next);
        std::swap(current, next);
      } else {
        space.scale_slices(res.dist, m, factors);
      }
    }
    ++res.sweeps;
    res.residual = max_marginal_error(space, res.dist, targets, scratch);
    res.residual_history.push_back(res.residual);
    if (res.residual <= tol) break;
    std::copy(scratch.begin(), scratch.begin() + ns, current.begin());
  }
  return res;
}

Channel channel_of(const HVBox& hv) {
  const std::size_t n = hv.space().size();
  std::vector<double> w(static_cast<std::size_t>(hv.nA()) * n, 0.0);
  for (const auto& blk : hv.blocks()) {
    double* row = w.data() + static_cast<std::size_t>(blk.a) * n;
    for (std::size_t i = 0; i < n; ++i) row[i] += blk.weight * blk.sigma[i];
  }
  return Channel(static_cast<std::size_t>(hv.nA()), n, std::move(w));
}

MasterProtocolSampler::MasterProtocolSampler(const HVBox& hv, std::uint64_t seed)
    : hv_(&hv), rng_(seed) {
  block_of_.assign(hv.nA(), std::vector<int>(hv.nR(), -1));
  for (std::size_t k = 0; k < hv.blocks().size(); ++k) {
    const auto& blk = hv.blocks()[k];
    block_of_[blk.a][blk.r] = static_cast<int>(k);
    std::vector<double> cdf(blk.sigma.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      acc += blk.sigma[i];
      cdf[i] = acc;
    }
    cdf_.push_back(std::move(cdf));
  }
}

std::pair<int, int> MasterProtocolSampler::sample(int a, int b) {
  if (a < 0 || a >= hv_->nA() || b < 0 || b >= hv_->space().length())
    throw ShapeError("master protocol input out of range");
  const auto& pr = hv_->alice_marginal()[a];
  double u = unit_(rng_);
  int r = -1;
  double acc = 0.0;
  for (int k = 0; k < static_cast<int>(pr.size()); ++k) {
    if (block_of_[a][k] < 0) continue;
    acc += pr[k];
    r = k;
    if (u < acc) break;
  }

  // upper_bound never selects a zero-mass entry: its cdf equals the
  // previous one.
  const auto& cdf = cdf_[block_of_[a][r]];
  u = unit_(rng_) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const std::size_t idx = std::min(static_cast<std::size_t>(it - cdf.begin()),
                                   cdf.size() - 1);
  return {r, hv_->space().digit(idx, b)};
}

std::pair<int, int> sample_master_protocol(const HVBox& hv, int a, int b,
                                           std::uint64_t seed) {
  MasterProtocolSampler sampler(hv, seed);
  return sampler.sample(a, b);
}

}  // namespace nlcap
