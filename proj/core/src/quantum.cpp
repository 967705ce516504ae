#include "nlcap/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "nlcap/errors.hpp"

namespace nlcap {
namespace {

using Matrix2 = std::array<Complex, 4>;

// (I + sign v.sigma) / 2
Matrix2 projector(const BlochVector& v, int outcome) {
  const double sign = outcome == 0 ? 1.0 : -1.0;
  return {Complex(0.5 * (1.0 + sign * v.z), 0.0),
          Complex(0.5 * sign * v.x, -0.5 * sign * v.y),
          Complex(0.5 * sign * v.x, 0.5 * sign * v.y),
          Complex(0.5 * (1.0 - sign * v.z), 0.0)};
}

// Cyclic Jacobi sweeps on a real symmetric matrix; returns the diagonal.
template <std::size_t N>
std::array<double, N> symmetric_eigenvalues(std::array<double, N * N> a) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) off += a[i * N + j] * a[i * N + j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        const double apq = a[p * N + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * N + q] - a[p * N + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a[k * N + p];
          const double akq = a[k * N + q];
          a[k * N + p] = c * akp - s * akq;
          a[k * N + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a[p * N + k];
          const double aqk = a[q * N + k];
          a[p * N + k] = c * apk - s * aqk;
          a[q * N + k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::array<double, N> ev;
  for (std::size_t i = 0; i < N; ++i) ev[i] = a[i * N + i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

void BlochVector::validate(double tol) const {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
      std::abs(norm() - 1.0) > tol) {
    throw ValidationError("Bloch vector (" + std::to_string(x) + ", " +
                          std::to_string(y) + ", " + std::to_string(z) +
                          ") is not a unit vector");
  }
}

BlochVector BlochVector::normalized(double x, double y, double z) {
  const double n = std::sqrt(x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n))
    throw ValidationError("cannot normalize a zero or non-finite vector");
  return {x / n, y / n, z / n};
}

std::array<double, 4> hermitian_eigenvalues(const TwoQubitState::Matrix& m) {
  // H = A + iB has the same spectrum, doubled, as [[A, -B], [B, A]].
  std::array<double, 64> real{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const Complex v = m[i * 4 + j];
      real[i * 8 + j] = v.real();
      real[(i + 4) * 8 + j + 4] = v.real();
      real[i * 8 + j + 4] = -v.imag();
      real[(i + 4) * 8 + j] = v.imag();
    }
  const auto ev8 = symmetric_eigenvalues<8>(real);
  return {ev8[0], ev8[2], ev8[4], ev8[6]};
}

TwoQubitState::TwoQubitState(const Matrix& rho) : rho_(rho) {
  Complex trace = 0.0;
  for (int i = 0; i < 4; ++i) {
    trace += rho_[i * 5];
    for (int j = 0; j < 4; ++j) {
      if (!std::isfinite(rho_[i * 4 + j].real()) ||
          !std::isfinite(rho_[i * 4 + j].imag()))
        throw ValidationError("density matrix has a non-finite entry");
      if (std::abs(rho_[i * 4 + j] - std::conj(rho_[j * 4 + i])) > 1e-12)
        throw ValidationError("density matrix is not Hermitian");
    }
  }
  if (std::abs(trace - 1.0) > 1e-12)
    throw ValidationError("density matrix trace is not 1");
  if (eigenvalues()[0] < -1e-10)
    throw ValidationError("density matrix has a negative eigenvalue");
}

std::array<double, 4> TwoQubitState::eigenvalues() const {
  return hermitian_eigenvalues(rho_);
}

TwoQubitState werner_state(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ValidationError("Werner visibility must lie in [0, 1], got " +
                          std::to_string(gamma));
  TwoQubitState::Matrix m{};
  const double noise = (1.0 - gamma) / 4.0;
  for (int i = 0; i < 4; ++i) m[i * 5] = noise;
  // |Phi+> = (|00> + |11>)/sqrt2 touches indices 0 and 3.
  for (int i : {0, 3})
    for (int j : {0, 3}) m[i * 4 + j] += gamma / 2.0;
  return TwoQubitState(m);
}

TwoQubitState mix_states(const TwoQubitState& lhs, const TwoQubitState& rhs,
                         double weight) {
  if (!(weight >= 0.0 && weight <= 1.0))
    throw ValidationError("mixing weight must lie in [0, 1]");
  TwoQubitState::Matrix m{};
  for (int i = 0; i < 16; ++i)
    m[i] = weight * lhs.matrix()[i] + (1.0 - weight) * rhs.matrix()[i];
  return TwoQubitState(m);
}

std::vector<BlochVector> cube13_measurements() {
  const double r2 = std::sqrt(2.0);
  const double r3 = std::sqrt(3.0);
  return {
      {1, 0, 0},
      {0, 1, 0},
      {0, 0, 1},
      {1 / r2, 1 / r2, 0},
      {1 / r2, -1 / r2, 0},
      {1 / r2, 0, 1 / r2},
      {1 / r2, 0, -1 / r2},
      {0, 1 / r2, 1 / r2},
      {0, 1 / r2, -1 / r2},
      {1 / r3, 1 / r3, 1 / r3},
      {1 / r3, 1 / r3, -1 / r3},
      {1 / r3, -1 / r3, 1 / r3},
      {1 / r3, -1 / r3, -1 / r3},
  };
}

NSBox born_box(const TwoQubitState& state, std::span<const BlochVector> alice,
               std::span<const BlochVector> bob) {
  if (alice.empty() || bob.empty())
    throw ShapeError("born_box needs at least one measurement per party");
  for (const auto& v : alice) v.validate();
  for (const auto& v : bob) v.validate();

  const BoxShape shape{static_cast<int>(alice.size()),
                       static_cast<int>(bob.size()), 2, 2};
  std::vector<double> p(shape.size());
  const auto& rho = state.matrix();
  std::size_t k = 0;
  for (const auto& va : alice) {
    for (const auto& vb : bob) {
      for (int r = 0; r < 2; ++r) {
        const Matrix2 pa = projector(va, r);
        for (int s = 0; s < 2; ++s) {
          const Matrix2 pb = projector(vb, s);
          // tr[rho (pa (x) pb)] = sum_{ij} rho_ij (pa (x) pb)_ji
          Complex tr = 0.0;
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
              const Complex op = pa[(j >> 1) * 2 + (i >> 1)] * pb[(j & 1) * 2 + (i & 1)];
              tr += rho[i * 4 + j] * op;
            }
          p[k++] = tr.real();
        }
      }
    }
  }
  return NSBox(shape, std::move(p), "born");
}

NSBox werner_box(double gamma, std::span<const BlochVector> alice,
                 std::span<const BlochVector> bob) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ValidationError("Werner visibility must lie in [0, 1], got " +
                          std::to_string(gamma));
  if (alice.empty() || bob.empty())
    throw ShapeError("werner_box needs at least one measurement per party");
  for (const auto& v : alice) v.validate();
  for (const auto& v : bob) v.validate();

  const BoxShape shape{static_cast<int>(alice.size()),
                       static_cast<int>(bob.size()), 2, 2};
  std::vector<double> p(shape.size());
  std::size_t k = 0;
  for (const auto& va : alice) {
    for (const auto& vb : bob) {
      const double corr = va.x * vb.x - va.y * vb.y + va.z * vb.z;
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) {
          const double sign = (r == s) ? 1.0 : -1.0;
          p[k++] = 0.25 * (1.0 + gamma * sign * corr);
        }
    }
  }
  return NSBox(shape, std::move(p), "werner");
}

std::vector<BlochVector> parse_measurements(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("measurement file: ") + e.what());
  }
  if (!doc.is_array() || doc.empty())
    throw ParseError("measurement file must be a non-empty JSON array");
  std::vector<BlochVector> out;
  for (const auto& item : doc) {
    if (!item.is_array() || item.size() != 3 || !item[0].is_number() ||
        !item[1].is_number() || !item[2].is_number())
      throw ParseError("measurement entries must be [x, y, z] number triples");
    const BlochVector raw{item[0].get<double>(), item[1].get<double>(),
                          item[2].get<double>()};
    raw.validate(1e-6);
    out.push_back(BlochVector::normalized(raw.x, raw.y, raw.z));
  }
  return out;
}

}  // namespace nlcap
