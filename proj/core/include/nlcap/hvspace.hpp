#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "nlcap/infotheory.hpp"
#include "nlcap/nsbox.hpp"

namespace nlcap {

inline constexpr std::size_t kDefaultSequenceCap = std::size_t{1} << 24;

// Mixed-radix index of Bob outcome sequences s = (s_1, ..., s_M), s_1 least
// significant: idx = sum_m s_m nS^(m-1).
class SequenceSpace {
 public:
  SequenceSpace() = default;
  // Throws CapacityLimitError when nS^nB exceeds `cap`.
  SequenceSpace(int length, int alphabet, std::size_t cap = kDefaultSequenceCap);

  int length() const { return length_; }
  int alphabet() const { return alphabet_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int m) const { return strides_[m]; }

  std::size_t encode(std::span<const int> seq) const;
  std::vector<int> decode(std::size_t idx) const;
  int digit(std::size_t idx, int m) const {
    return static_cast<int>((idx / strides_[m]) % alphabet_);
  }

  // out[m * nS + s] = sum over sequences with s_m = s.
  void coordinate_marginals(std::span<const double> dist,
                            std::span<double> out) const;
  // Sums of the s_m slices only; out has nS entries.
  void slice_sums(std::span<const double> dist, int m,
                  std::span<double> out) const;
  // dist[idx] *= factors[s_m(idx)].
  void scale_slices(std::span<double> dist, int m,
                    std::span<const double> factors) const;

 private:
  int length_ = 0;
  int alphabet_ = 0;
  std::size_t size_ = 0;
  std::vector<std::size_t> strides_;
};

// sigma_{r,a}: distribution over sequences conditioned on Alice's (r, a).
struct HVBlock {
  int r = 0;
  int a = 0;
  double weight = 0.0;             // P(r|a)
  std::vector<double> sigma;       // one entry per sequence index
  std::vector<std::uint8_t> support;  // 1 where sigma may be nonzero
};

// A point of the feasible set: rho(r, s|a) = P(r|a) sigma_{r,a}(s). Blocks
// are stored a-major, r-minor; inputs with P(r|a) = 0 have no block.
class HVBox {
 public:
  HVBox() = default;
  // Checks block normalization (1e-9), nonnegativity and support.
  HVBox(std::vector<std::vector<double>> alice_marginal, SequenceSpace space,
        std::vector<HVBlock> blocks);

  int nA() const { return static_cast<int>(alice_marginal_.size()); }
  int nR() const {
    return alice_marginal_.empty() ? 0 : static_cast<int>(alice_marginal_[0].size());
  }
  const SequenceSpace& space() const { return space_; }
  const std::vector<std::vector<double>>& alice_marginal() const {
    return alice_marginal_;
  }
  const std::vector<HVBlock>& blocks() const { return blocks_; }
  // Null when P(r|a) = 0.
  const HVBlock* find(int r, int a) const;

 private:
  std::vector<std::vector<double>> alice_marginal_;
  SequenceSpace space_;
  std::vector<HVBlock> blocks_;
};

// Target conditional marginals of block (r, a): targets[m * nS + s] =
// P(r, s|a, b = m) / P(r|a).
std::vector<double> block_targets(const NSBox& box, int r, int a);

// Product member sigma_{r,a}(s) = prod_m P(s_m|r, a, b = m).
HVBox product_hvbox(const NSBox& box, std::size_t cap = kDefaultSequenceCap);

// max over (r, a, m, s) of |sum_{s_m = s} P(r|a) sigma_{r,a} - P(r,s|a,b=m)|.
double marginal_residual(const HVBox& hv, const NSBox& box);

struct IpfResult {
  std::vector<double> dist;
  int sweeps = 0;
  double residual = 0.0;  // max coordinate-marginal error at return
  std::vector<double> residual_history;  // after each full sweep
};

inline constexpr double kDefaultIpfTol = 1e-10;
inline constexpr int kDefaultIpfSweeps = 500;

// Classic cyclic IPF: each sweep rescales every s_m slice, m = 1..M, by
// target(s) / current(s). Slices with zero target become exactly zero.
// Throws SupportError if a positive target meets an empty slice and
// ConvergenceError when max_sweeps is exhausted.
IpfResult ipf_project(std::span<const double> block,
                      std::span<const double> targets,
                      const SequenceSpace& space, double tol = kDefaultIpfTol,
                      int max_sweeps = kDefaultIpfSweeps);

// rho(s|a) = sum_r P(r|a) sigma_{r,a}(s).
Channel channel_of(const HVBox& hv);

// Master protocol: r ~ P(r|a), s ~ sigma_{r,a}, Bob answers s_b. Holds
// per-block cumulative tables so repeated draws are cheap.
class MasterProtocolSampler {
 public:
  MasterProtocolSampler(const HVBox& hv, std::uint64_t seed);
  std::pair<int, int> sample(int a, int b);

 private:
  const HVBox* hv_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::vector<std::vector<double>> cdf_;   // per block
  std::vector<std::vector<int>> block_of_; // [a][r] -> block index or -1
};

std::pair<int, int> sample_master_protocol(const HVBox& hv, int a, int b,
                                           std::uint64_t seed);

}  // namespace nlcap
