#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "nlcap/nsbox.hpp"

namespace nlcap {

// Unit vector on the Bloch sphere. Outcome index 0 is the projector onto
// +v, index 1 onto -v.
struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  double norm() const;
  // Throws ValidationError unless |v| = 1 within tol.
  void validate(double tol = 1e-12) const;
  static BlochVector normalized(double x, double y, double z);
};

using Complex = std::complex<double>;

// Density operator on C^2 (x) C^2 in the basis |00>,|01>,|10>,|11>.
class TwoQubitState {
 public:
  using Matrix = std::array<Complex, 16>;

  // Validates Hermiticity, unit trace and positivity.
  explicit TwoQubitState(const Matrix& rho);

  const Matrix& matrix() const { return rho_; }
  Complex operator()(int i, int j) const { return rho_[i * 4 + j]; }
  // Ascending eigenvalues.
  std::array<double, 4> eigenvalues() const;

 private:
  Matrix rho_{};
};

// gamma |Phi+><Phi+| + (1 - gamma) I/4.
TwoQubitState werner_state(double gamma);

// weight * lhs + (1 - weight) * rhs.
TwoQubitState mix_states(const TwoQubitState& lhs, const TwoQubitState& rhs,
                         double weight);

// Eigenvalues of a 4x4 Hermitian matrix, ascending.
std::array<double, 4> hermitian_eigenvalues(const TwoQubitState::Matrix& m);

// The 13 symmetry axes of a cube: 3 face, 6 edge, 4 vertex directions.
std::vector<BlochVector> cube13_measurements();

// Born rule P(r,s|a,b) = tr[rho (Pi_r^a (x) Pi_s^b)], evaluated with the
// full 4x4 matrix product.
NSBox born_box(const TwoQubitState& state, std::span<const BlochVector> alice,
               std::span<const BlochVector> bob);

// Closed form for Werner states:
// 1/4 (1 + gamma r s (a_x b_x - a_y b_y + a_z b_z)), r, s = +-1.
NSBox werner_box(double gamma, std::span<const BlochVector> alice,
                 std::span<const BlochVector> bob);

// Parses a JSON array of [x, y, z] triples. Each vector must have unit norm
// within 1e-6 and is renormalized to double precision.
std::vector<BlochVector> parse_measurements(const std::string& json_text);

}  // namespace nlcap
