#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace pinnopt {

// Truncated multivariate Taylor ("jet") arithmetic: polynomials in up to
// three seed variables, truncated at total degree <= 3. Coefficients carry
// the Taylor normalization, i.e. the partial derivative for a multi-index
// alpha equals alpha! * coeff(alpha).
//
// Coefficients are stored in graded-lexicographic order, e.g. for two
// variables and order 3:
//   (0,0) | (1,0) (0,1) | (2,0) (1,1) (0,2) | (3,0) (2,1) (1,2) (0,3)
struct TaylorLayout {
  int nvars = 0;
  int order = 0;
  int ncoeff = 0;
  std::vector<std::array<int, 3>> exps;  // exponent tuple per coefficient

  struct MulEntry {
    int a, b, c;  // c[c] += a[a] * b[b]
  };
  std::vector<MulEntry> mul;  // all ordered pairs with deg(a)+deg(b) <= order

  // Index of the coefficient with the given exponents, -1 if out of range.
  int index(const std::array<int, 3>& e) const {
    for (int i = 0; i < ncoeff; ++i)
      if (exps[i] == e) return i;
    return -1;
  }

  // alpha! for the coefficient: converts Taylor coefficient to derivative.
  double factorial_scale(int idx) const {
    static constexpr double fact[4] = {1.0, 1.0, 2.0, 6.0};
    const auto& e = exps[idx];
    return fact[e[0]] * fact[e[1]] * fact[e[2]];
  }

  static const TaylorLayout& get(int nvars, int order);
};

inline constexpr int kMaxJetCoeff = 20;  // nvars=3, order=3

// Value-semantics jet over a fixed layout. Heavy batched code works on raw
// coefficient arrays; this class covers scalar paths (embeddings, tests).
class Jet {
 public:
  Jet() = default;
  explicit Jet(const TaylorLayout& lay) : lay_(&lay) { c_.fill(0.0); }

  static Jet constant(const TaylorLayout& lay, double v) {
    Jet j(lay);
    j.c_[0] = v;
    return j;
  }
  // Seed coordinate `var` (0-based) with unit first-order coefficient.
  static Jet variable(const TaylorLayout& lay, double v, int var) {
    Jet j(lay);
    j.c_[0] = v;
    if (lay.order >= 1) {
      std::array<int, 3> e{0, 0, 0};
      e[var] = 1;
      j.c_[static_cast<std::size_t>(lay.index(e))] = 1.0;
    }
    return j;
  }

  const TaylorLayout& layout() const { return *lay_; }
  double value() const { return c_[0]; }
  double coeff(int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& coeff(int i) { return c_[static_cast<std::size_t>(i)]; }
  std::span<const double> coeffs() const { return {c_.data(), static_cast<std::size_t>(lay_->ncoeff)}; }

  // Derivative value for exponent tuple e (coefficient times e!).
  double derivative(const std::array<int, 3>& e) const {
    int i = lay_->index(e);
    if (i < 0) throw std::out_of_range("jet derivative outside layout");
    return c_[static_cast<std::size_t>(i)] * lay_->factorial_scale(i);
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r = a;
    for (int i = 0; i < a.lay_->ncoeff; ++i) r.c_[static_cast<std::size_t>(i)] += b.c_[static_cast<std::size_t>(i)];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r = a;
    for (int i = 0; i < a.lay_->ncoeff; ++i) r.c_[static_cast<std::size_t>(i)] -= b.c_[static_cast<std::size_t>(i)];
    return r;
  }
  friend Jet operator*(const Jet& a, double s) {
    Jet r = a;
    for (int i = 0; i < a.lay_->ncoeff; ++i) r.c_[static_cast<std::size_t>(i)] *= s;
    return r;
  }
  friend Jet operator*(double s, const Jet& a) { return a * s; }
  friend Jet operator+(const Jet& a, double s) {
    Jet r = a;
    r.c_[0] += s;
    return r;
  }
  friend Jet operator-(const Jet& a, double s) { return a + (-s); }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(*a.lay_);
    for (const auto& m : a.lay_->mul)
      r.c_[static_cast<std::size_t>(m.c)] += a.c_[static_cast<std::size_t>(m.a)] * b.c_[static_cast<std::size_t>(m.b)];
    return r;
  }

  // Composition with an analytic scalar function given by its Taylor
  // derivatives at the jet's value: derivs[k] = f^(k)(value), k = 0..order.
  // Exact in the truncated algebra since (a - a0) is nilpotent.
  friend Jet lift(const Jet& a, std::span<const double> derivs) {
    const TaylorLayout& lay = *a.lay_;
    Jet h = a;
    h.c_[0] = 0.0;
    Jet r = Jet::constant(lay, derivs[0]);
    Jet hp = h;  // h^k
    static constexpr double inv_fact[4] = {1.0, 1.0, 0.5, 1.0 / 6.0};
    for (int k = 1; k <= lay.order; ++k) {
      if (k > 1) hp = hp * h;
      r = r + hp * (derivs[static_cast<std::size_t>(k)] * inv_fact[k]);
    }
    return r;
  }

 private:
  const TaylorLayout* lay_ = nullptr;
  std::array<double, kMaxJetCoeff> c_{};
};

inline Jet sin(const Jet& a) {
  double s = std::sin(a.value()), c = std::cos(a.value());
  const double d[4] = {s, c, -s, -c};
  return lift(a, {d, static_cast<std::size_t>(a.layout().order) + 1});
}

inline Jet cos(const Jet& a) {
  double s = std::sin(a.value()), c = std::cos(a.value());
  const double d[4] = {c, -s, -c, s};
  return lift(a, {d, static_cast<std::size_t>(a.layout().order) + 1});
}

inline Jet tanh(const Jet& a) {
  double f = std::tanh(a.value());
  double f1 = 1.0 - f * f;
  double f2 = -2.0 * f * f1;
  double f3 = -2.0 * (f1 * f1 + f * f2);
  const double d[4] = {f, f1, f2, f3};
  return lift(a, {d, static_cast<std::size_t>(a.layout().order) + 1});
}

inline Jet exp(const Jet& a) {
  double e = std::exp(a.value());
  const double d[4] = {e, e, e, e};
  return lift(a, {d, static_cast<std::size_t>(a.layout().order) + 1});
}

}  // namespace pinnopt
