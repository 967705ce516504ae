#include "nlcap/nsbox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlcap/errors.hpp"
#include "nlcap/infotheory.hpp"

namespace nlcap {

void BoxShape::validate() const {
  if (nA < 1 || nB < 1 || nR < 1 || nS < 1) {
    throw ShapeError("box shape counts must be >= 1 (got nA=" +
                     std::to_string(nA) + " nB=" + std::to_string(nB) +
                     " nR=" + std::to_string(nR) +
                     " nS=" + std::to_string(nS) + ")");
  }
}

NSBox::NSBox(BoxShape shape, std::vector<double> p, std::string name)
    : shape_(shape), p_(std::move(p)), name_(std::move(name)) {
  shape_.validate();
  if (p_.size() != shape_.size()) {
    throw ShapeError("box tensor has " + std::to_string(p_.size()) +
                     " entries, shape requires " +
                     std::to_string(shape_.size()));
  }
  for (double v : p_) {
    if (!std::isfinite(v)) throw ValidationError("box tensor entry is not finite");
  }
}

NSBox NSBox::with_entry(int a, int b, int r, int s, double value) const {
  std::vector<double> p = p_;
  p.at(index(a, b, r, s)) = value;
  return NSBox(shape_, std::move(p), name_);
}

NonsignalingReport verify_nonsignaling(const NSBox& box, double tol) {
  const auto& sh = box.shape();
  NonsignalingReport rep;
  rep.min_entry = *std::min_element(box.data().begin(), box.data().end());

  // Alice-side marginals sum_s P(r,s|a,b) and Bob-side sum_r P(r,s|a,b).
  std::vector<double> alice(static_cast<std::size_t>(sh.nA) * sh.nB * sh.nR, 0.0);
  std::vector<double> bob(static_cast<std::size_t>(sh.nA) * sh.nB * sh.nS, 0.0);
  for (int a = 0; a < sh.nA; ++a) {
    for (int b = 0; b < sh.nB; ++b) {
      double total = 0.0;
      for (int r = 0; r < sh.nR; ++r) {
        for (int s = 0; s < sh.nS; ++s) {
          const double v = box(a, b, r, s);
          alice[(static_cast<std::size_t>(a) * sh.nB + b) * sh.nR + r] += v;
          bob[(static_cast<std::size_t>(a) * sh.nB + b) * sh.nS + s] += v;
          total += v;
        }
      }
      rep.normalization_error =
          std::max(rep.normalization_error, std::abs(total - 1.0));
    }
  }

  // Pairwise over the conditioning input, as the conditions are stated.
  const auto ai = [&](int a, int b, int r) {
    return alice[(static_cast<std::size_t>(a) * sh.nB + b) * sh.nR + r];
  };
  const auto bi = [&](int a, int b, int s) {
    return bob[(static_cast<std::size_t>(a) * sh.nB + b) * sh.nS + s];
  };
  double worst = 0.0;
  for (int a = 0; a < sh.nA; ++a)
    for (int r = 0; r < sh.nR; ++r)
      for (int b = 0; b < sh.nB; ++b)
        for (int bb = b + 1; bb < sh.nB; ++bb)
          worst = std::max(worst, std::abs(ai(a, b, r) - ai(a, bb, r)));
  for (int b = 0; b < sh.nB; ++b)
    for (int s = 0; s < sh.nS; ++s)
      for (int a = 0; a < sh.nA; ++a)
        for (int aa = a + 1; aa < sh.nA; ++aa)
          worst = std::max(worst, std::abs(bi(a, b, s) - bi(aa, b, s)));
  rep.max_residual = worst;
  rep.ok = rep.max_residual <= tol && rep.normalization_error <= tol &&
           rep.min_entry >= -tol;
  return rep;
}

void require_valid(const NSBox& box, double tol) {
  const auto rep = verify_nonsignaling(box, tol);
  if (rep.min_entry < -tol) {
    throw ValidationError("box has a negative entry " +
                          std::to_string(rep.min_entry));
  }
  if (rep.normalization_error > tol) {
    throw ValidationError("box is not normalized (error " +
                          std::to_string(rep.normalization_error) + ")");
  }
  if (rep.max_residual > tol) {
    throw SignalingError("box violates the nonsignaling conditions (residual " +
                             std::to_string(rep.max_residual) + ")",
                         rep.max_residual);
  }
}

Marginals marginals(const NSBox& box) {
  const auto& sh = box.shape();
  Marginals m;
  m.alice.assign(sh.nA, std::vector<double>(sh.nR, 0.0));
  m.bob.assign(sh.nB, std::vector<double>(sh.nS, 0.0));
  for (int a = 0; a < sh.nA; ++a)
    for (int r = 0; r < sh.nR; ++r)
      for (int s = 0; s < sh.nS; ++s) m.alice[a][r] += box(a, 0, r, s);
  for (int b = 0; b < sh.nB; ++b)
    for (int s = 0; s < sh.nS; ++s)
      for (int r = 0; r < sh.nR; ++r) m.bob[b][s] += box(0, b, r, s);
  return m;
}

NSBox pr_box() {
  const BoxShape shape{2, 2, 2, 2};
  std::vector<double> p(shape.size(), 0.0);
  NSBox proto(shape, p);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
          if ((r ^ s) == (a & b)) p[proto.index(a, b, r, s)] = 0.5;
  return NSBox(shape, std::move(p), "pr");
}

NSBox local_deterministic_box(const BoxShape& shape,
                              const std::function<int(int)>& alice,
                              const std::function<int(int)>& bob) {
  shape.validate();
  std::vector<double> p(shape.size(), 0.0);
  NSBox proto(shape, p);
  for (int a = 0; a < shape.nA; ++a) {
    const int r = alice(a);
    if (r < 0 || r >= shape.nR)
      throw ValidationError("local strategy maps a=" + std::to_string(a) +
                            " to out-of-range r=" + std::to_string(r));
    for (int b = 0; b < shape.nB; ++b) {
      const int s = bob(b);
      if (s < 0 || s >= shape.nS)
        throw ValidationError("local strategy maps b=" + std::to_string(b) +
                              " to out-of-range s=" + std::to_string(s));
      p[proto.index(a, b, r, s)] = 1.0;
    }
  }
  return NSBox(shape, std::move(p), "local");
}

NSBox convex_mixture(std::span<const NSBox> boxes,
                     std::span<const double> weights) {
  if (boxes.empty()) throw ShapeError("convex mixture of zero boxes");
  if (boxes.size() != weights.size())
    throw ShapeError("convex mixture needs one weight per box");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("mixture weights sum to " + std::to_string(total));

  const BoxShape shape = boxes.front().shape();
  std::vector<double> p(shape.size(), 0.0);
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (boxes[k].shape() != shape)
      throw ShapeError("convex mixture of boxes with different shapes");
    const auto src = boxes[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += weights[k] * src[i];
  }
  return NSBox(shape, std::move(p), "mixture");
}

double conditional_mutual_information(const NSBox& box, int a, int b) {
  const auto& sh = box.shape();
  if (a < 0 || a >= sh.nA || b < 0 || b >= sh.nB)
    throw ShapeError("input index out of range");
  std::vector<double> joint, pr(sh.nR, 0.0), ps(sh.nS, 0.0);
  joint.reserve(static_cast<std::size_t>(sh.nR) * sh.nS);
  for (int r = 0; r < sh.nR; ++r)
    for (int s = 0; s < sh.nS; ++s) {
      const double v = box(a, b, r, s);
      joint.push_back(v);
      pr[r] += v;
      ps[s] += v;
    }
  return std::max(0.0, entropy(pr) + entropy(ps) - entropy(joint));
}

CBox::CBox(int n_inputs, int nB, int nS, std::vector<double> q,
           std::vector<std::pair<int, int>> inputs,
           std::vector<std::pair<int, int>> dropped)
    : n_inputs_(n_inputs),
      nB_(nB),
      nS_(nS),
      q_(std::move(q)),
      inputs_(std::move(inputs)),
      dropped_(std::move(dropped)) {
  if (n_inputs_ < 1 || nB_ < 1 || nS_ < 1)
    throw ShapeError("C-box counts must be >= 1");
  if (q_.size() != static_cast<std::size_t>(n_inputs_) * nB_ * nS_)
    throw ShapeError("C-box tensor size does not match its shape");
  if (!inputs_.empty() && inputs_.size() != static_cast<std::size_t>(n_inputs_))
    throw ShapeError("C-box input labels do not match the input count");
}

void require_valid(const CBox& cbox, double tol) {
  for (int x = 0; x < cbox.n_inputs(); ++x)
    for (int b = 0; b < cbox.nB(); ++b) {
      double total = 0.0;
      for (int s = 0; s < cbox.nS(); ++s) {
        const double v = cbox(x, b, s);
        if (!(v >= -tol)) throw ValidationError("C-box has a negative entry");
        total += v;
      }
      if (std::abs(total - 1.0) > tol)
        throw ValidationError("C-box row (x=" + std::to_string(x) +
                              ", b=" + std::to_string(b) + ") is not normalized");
    }
}

CBox to_cbox(const NSBox& box) {
  const auto& sh = box.shape();
  const auto marg = marginals(box);
  std::vector<std::pair<int, int>> inputs, dropped;
  std::vector<double> q;
  for (int a = 0; a < sh.nA; ++a) {
    for (int r = 0; r < sh.nR; ++r) {
      const double pra = marg.alice[a][r];
      if (pra <= 0.0) {
        dropped.emplace_back(r, a);
        continue;
      }
      inputs.emplace_back(r, a);
      for (int b = 0; b < sh.nB; ++b)
        for (int s = 0; s < sh.nS; ++s) q.push_back(box(a, b, r, s) / pra);
    }
  }
  if (inputs.empty()) throw ValidationError("box has no input with positive mass");
  const int n = static_cast<int>(inputs.size());
  return CBox(n, sh.nB, sh.nS, std::move(q), std::move(inputs), std::move(dropped));
}

}  // namespace nlcap
