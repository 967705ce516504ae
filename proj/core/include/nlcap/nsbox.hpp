#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nlcap {

// Alphabet sizes of a bipartite box. Outcome counts are uniform across
// inputs: every Alice input has nR outcomes, every Bob input nS outcomes.
struct BoxShape {
  int nA = 0;  // Alice inputs a
  int nB = 0;  // Bob inputs b
  int nR = 0;  // Alice outcomes r
  int nS = 0;  // Bob outcomes s

  // Throws ShapeError if any count is < 1.
  void validate() const;
  std::size_t size() const {
    return static_cast<std::size_t>(nA) * nB * nR * nS;
  }
  friend bool operator==(const BoxShape&, const BoxShape&) = default;
};

// Conditional distribution P(r,s|a,b) stored densely as [a][b][r][s].
//
// Construction only checks that the tensor matches the shape and that all
// entries are finite; probabilistic validity is checked by
// verify_nonsignaling so that signaling fixtures can be represented.
class NSBox {
 public:
  NSBox() = default;
  NSBox(BoxShape shape, std::vector<double> p, std::string name = {});

  const BoxShape& shape() const { return shape_; }
  const std::string& name() const { return name_; }
  std::span<const double> data() const { return p_; }

  double operator()(int a, int b, int r, int s) const {
    return p_[index(a, b, r, s)];
  }
  std::size_t index(int a, int b, int r, int s) const {
    return ((static_cast<std::size_t>(a) * shape_.nB + b) * shape_.nR + r) *
               shape_.nS +
           s;
  }

  // Returns a copy with entry (a,b,r,s) replaced.
  NSBox with_entry(int a, int b, int r, int s, double value) const;

 private:
  BoxShape shape_;
  std::vector<double> p_;
  std::string name_;
};

struct NonsignalingReport {
  double max_residual = 0.0;        // worst violation of either family
  double normalization_error = 0.0; // max_{a,b} |sum_{r,s} P - 1|
  double min_entry = 0.0;
  bool ok = false;
};

inline constexpr double kDefaultValidationTol = 1e-9;

// Evaluates both families of nonsignaling conditions. `ok` additionally
// requires nonnegativity (min_entry >= -tol) and normalization within tol.
NonsignalingReport verify_nonsignaling(const NSBox& box,
                                       double tol = kDefaultValidationTol);

// Throws ValidationError / SignalingError when the box is not a valid
// nonsignaling box at `tol`.
void require_valid(const NSBox& box, double tol = kDefaultValidationTol);

struct Marginals {
  std::vector<std::vector<double>> alice;  // [a][r] = P(r|a)
  std::vector<std::vector<double>> bob;    // [b][s] = P(s|b)
};

// Alice marginals use b = 0, Bob marginals a = 0; the nonsignaling
// conditions make the choice irrelevant.
Marginals marginals(const NSBox& box);

NSBox pr_box();

// Deterministic local box: r = alice(a), s = bob(b).
NSBox local_deterministic_box(const BoxShape& shape,
                              const std::function<int(int)>& alice,
                              const std::function<int(int)>& bob);

NSBox convex_mixture(std::span<const NSBox> boxes,
                     std::span<const double> weights);

// I(R;S) in bits of the joint P(r,s|a,b) at fixed inputs.
double conditional_mutual_information(const NSBox& box, int a, int b);

// Composite-input channel box Q[x][b][s] = P(s|r,a;b), x = (r,a). Inputs
// with P(r|a) = 0 are dropped and listed in `dropped`.
class CBox {
 public:
  CBox() = default;
  CBox(int n_inputs, int nB, int nS, std::vector<double> q,
       std::vector<std::pair<int, int>> inputs = {},
       std::vector<std::pair<int, int>> dropped = {});

  int n_inputs() const { return n_inputs_; }
  int nB() const { return nB_; }
  int nS() const { return nS_; }
  double operator()(int x, int b, int s) const {
    return q_[(static_cast<std::size_t>(x) * nB_ + b) * nS_ + s];
  }
  std::span<const double> data() const { return q_; }
  // (r, a) labels of each composite input; empty for hand-built C-boxes.
  const std::vector<std::pair<int, int>>& inputs() const { return inputs_; }
  const std::vector<std::pair<int, int>>& dropped() const { return dropped_; }

 private:
  int n_inputs_ = 0;
  int nB_ = 0;
  int nS_ = 0;
  std::vector<double> q_;
  std::vector<std::pair<int, int>> inputs_;
  std::vector<std::pair<int, int>> dropped_;
};

// Checks nonnegativity and per-row normalization within tol.
void require_valid(const CBox& cbox, double tol = kDefaultValidationTol);

CBox to_cbox(const NSBox& box);

}  // namespace nlcap
