#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlcap {

// Row-stochastic matrix W[x][z] = W(z|x), stored row-major.
class Channel {
 public:
  Channel() = default;
  // Throws ShapeError on size mismatch and ValidationError if a row is
  // negative or not normalized within `tol`.
  Channel(std::size_t n_inputs, std::size_t n_outputs, std::vector<double> w,
          double tol = 1e-9);

  std::size_t n_inputs() const { return n_in_; }
  std::size_t n_outputs() const { return n_out_; }
  std::span<const double> row(std::size_t x) const {
    return {w_.data() + x * n_out_, n_out_};
  }
  double operator()(std::size_t x, std::size_t z) const {
    return w_[x * n_out_ + z];
  }
  std::span<const double> data() const { return w_; }

  // Channel with inputs (x1,x2) -> outputs (z1,z2), x2 and z2 fastest.
  friend Channel kronecker(const Channel& lhs, const Channel& rhs);

 private:
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  std::vector<double> w_;
};

Channel kronecker(const Channel& lhs, const Channel& rhs);

// All functions below report bits and use 0 log 0 = 0.
double entropy(std::span<const double> p);

// D(p||q). Returns +infinity when p puts mass where q has none.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Output distribution q(z) = sum_x p(x) W(z|x).
std::vector<double> output_distribution(std::span<const double> p,
                                        const Channel& w);

double mutual_information(std::span<const double> p, const Channel& w);

struct CapacityOptions {
  double tol_bits = 1e-9;
  int max_iters = 100000;
  // Optional warm start; must have one entry per channel input.
  std::vector<double> initial;
  // Record the lower/upper certificate at every iteration.
  bool record_history = false;
  // Largest over-relaxation factor mu in p <- p exp(mu D) / Z. 1 is the
  // classical iteration. Larger values let mu grow adaptively; a step that
  // lowers I(p;W) is rejected and retried with mu = 1, so the lower bound
  // stays non-decreasing.
  double max_relaxation = 1.0;
  // Interleave projected Newton steps on the input simplex (Hessian of
  // I(p;W) restricted to the active inputs). Accepted only when they raise
  // I(p;W); intended for channels with few inputs and many outputs.
  bool newton_steps = false;
  // When false the last iterate is returned with converged = false instead
  // of throwing ConvergenceError.
  bool throw_on_limit = true;
};

struct CapacityResult {
  double capacity_bits = 0.0;  // I(p*;W), a certified lower bound
  double upper_bits = 0.0;     // max_x D(W(.|x)||q*), a certified upper bound
  double gap_bits = 0.0;       // upper_bits - capacity_bits
  std::vector<double> p_star;
  std::vector<double> q_star;
  // D(W(.|x)||q*) in nats for every input at the final iterate.
  std::vector<double> divergences_nats;
  int iterations = 0;
  bool converged = false;
  std::vector<double> lower_history;
  std::vector<double> upper_history;
};

// Blahut-Arimoto iteration p <- p 2^{D(W(.|x)||q)} / Z, stopped when the
// certificate gap max_x D(W(.|x)||q) - I(p;W) falls to tol_bits.
CapacityResult channel_capacity(const Channel& w,
                                const CapacityOptions& opts = {});

}  // namespace nlcap
