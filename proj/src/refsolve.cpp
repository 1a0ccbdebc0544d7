#include "pinnopt/refsolve.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace pinnopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::VectorXcd fft_forward(const Eigen::VectorXd& v) {
  thread_local Eigen::FFT<double> fft;
  Eigen::VectorXcd out;
  Eigen::VectorXcd in = v.cast<std::complex<double>>();
  fft.fwd(out, in);
  return out;
}

Eigen::VectorXd fft_inverse_real(const Eigen::VectorXcd& v) {
  thread_local Eigen::FFT<double> fft;
  Eigen::VectorXcd out;
  fft.inv(out, v);
  return out.real();
}

// Signed mode number of FFT bin k; Nyquist is +n/2.
int mode_number(int k, int n) { return k <= n / 2 ? k : k - n; }

// Spectral RHS for the three evolution equations, written for u_t:
//   advection: u_t = -c u_x
//   kdv:       u_t = -u u_x + nu u_xxx
//   burgers:   u_t = -u u_x + nu u_xx
// Uses half-spectrum real transforms with preallocated buffers: the
// integrator is stability-bound for KdV (dt ~ n^-3), so the per-call cost
// dominates the solver runtime.
class SpectralRhs {
 public:
  SpectralRhs(const PdeProblem& problem, const PeriodicGrid& grid, bool dealias)
      : grid_(grid), dealias_(dealias) {
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    if (problem.name == "advection") {
      kind_ = Kind::advection;
      c_ = problem.advection_c;
    } else if (problem.name == "kdv") {
      kind_ = Kind::kdv;
      nu_ = problem.nu;
    } else if (problem.name == "burgers") {
      kind_ = Kind::burgers;
      nu_ = problem.nu;
    } else {
      throw std::invalid_argument("integrate: no spectral right-hand side for " + problem.name);
    }
    const int n = grid.n;
    const int nh = n / 2 + 1;
    d1_.resize(nh);
    dlin_.resize(nh);
    const double base = kTwoPi / grid.length();
    const int lin_order = kind_ == Kind::kdv ? 3 : 2;
    for (int k = 0; k < nh; ++k) {
      std::complex<double> iw(0.0, base * k);
      d1_(k) = (k == n / 2) ? std::complex<double>(0.0) : iw;  // odd order: drop Nyquist
      std::complex<double> m = iw * iw;
      if (lin_order == 3) m *= (k == n / 2) ? std::complex<double>(0.0) : iw;
      dlin_(k) = m;
    }
    spec_.resize(nh);
    work_.resize(nh);
    ux_.resize(n);
    lin_.resize(n);
    nonlin_.resize(n);
  }

  void operator()(const Eigen::VectorXd& u, Eigen::VectorXd& dudt) const {
    const int n = grid_.n;
    fft_.fwd(spec_, u);
    work_ = spec_.cwiseProduct(d1_);
    fft_.inv(ux_, work_, n);
    switch (kind_) {
      case Kind::advection:
        dudt = -c_ * ux_;
        return;
      case Kind::kdv:
      case Kind::burgers:
        nonlin_ = u.cwiseProduct(ux_);
        if (dealias_) {
          fft_.fwd(work_, nonlin_);
          for (int k = n / 3 + 1; k < n / 2 + 1; ++k) work_(k) = 0.0;
          fft_.inv(nonlin_, work_, n);
        }
        work_ = spec_.cwiseProduct(dlin_);
        fft_.inv(lin_, work_, n);
        dudt = nu_ * lin_ - nonlin_;
        return;
    }
  }

 private:
  enum class Kind { advection, kdv, burgers };
  Kind kind_ = Kind::advection;
  PeriodicGrid grid_;
  bool dealias_ = false;
  double c_ = 0.0, nu_ = 0.0;
  Eigen::VectorXcd d1_, dlin_;
  mutable Eigen::FFT<double> fft_;
  mutable Eigen::VectorXcd spec_, work_;
  mutable Eigen::VectorXd ux_, lin_, nonlin_;
};

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Field spectral_derivative(const Field& field, int order) {
  if (order < 1 || order > 3)
    throw std::invalid_argument("spectral_derivative: order must be 1..3");
  field.grid.validate();
  const int n = field.grid.n;
  Eigen::VectorXcd spec = fft_forward(field.values);
  const double base = kTwoPi / field.grid.length();
  for (int k = 0; k < n; ++k) {
    if (k == n / 2 && order % 2 == 1) {
      spec(k) = 0.0;
      continue;
    }
    std::complex<double> iw(0.0, base * mode_number(k, n));
    std::complex<double> m = iw;
    for (int j = 1; j < order; ++j) m *= iw;
    spec(k) *= m;
  }
  Field out;
  out.grid = field.grid;
  out.time = field.time;
  out.values = fft_inverse_real(spec);
  return out;
}

std::vector<Field> integrate(const PdeProblem& problem, const Field& u0,
                             const std::vector<double>& t_samples,
                             const IntegratorConfig& cfg) {
  u0.grid.validate();
  if (t_samples.empty()) return {};
  for (std::size_t i = 0; i + 1 < t_samples.size(); ++i)
    if (t_samples[i + 1] <= t_samples[i])
      throw std::invalid_argument("integrate: t_samples must be strictly ascending");
  if (t_samples.front() < u0.time)
    throw std::invalid_argument("integrate: samples precede the initial time");

  SpectralRhs rhs(problem, u0.grid, cfg.dealias);
  const int n = u0.grid.n;

  std::vector<Field> out;
  out.reserve(t_samples.size());

  double t = u0.time;
  Eigen::VectorXd y = u0.values;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  rhs(y, k1);

  // PI controller constants as in Hairer's DOPRI5.
  const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  const double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  double facold = 1e-4;
  double h = cfg.initial_dt;
  long nstep = 0;

  auto snapshot = [&](double time) {
    Field f;
    f.grid = u0.grid;
    f.time = time;
    f.values = y;
    out.push_back(std::move(f));
  };

  for (double target : t_samples) {
    if (target == t) {
      snapshot(t);
      continue;
    }
    bool reached = false;
    while (!reached) {
      if (++nstep > cfg.max_steps)
        throw IntegrationFailure("integrate: exceeded max_steps", t);
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw IntegrationFailure("integrate: step size underflow", t);
      bool last = false;
      if (t + h >= target) {
        h = target - t;
        last = true;
      }

      ytmp = y + h * (a21 * k1);
      rhs(ytmp, k2);
      ytmp = y + h * (a31 * k1 + a32 * k2);
      rhs(ytmp, k3);
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(ytmp, k4);
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(ytmp, k5);
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(ytmp, k6);
      ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      rhs(ynew, k7);
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double norm = 0.0;
      for (int i = 0; i < n; ++i) {
        double sk = cfg.atol + cfg.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
        double q = err(i) / sk;
        norm += q * q;
      }
      norm = std::sqrt(norm / n);
      if (!std::isfinite(norm))
        throw IntegrationFailure("integrate: non-finite state", t);

      double fac11 = std::pow(norm, expo1);
      if (norm <= 1.0) {
        facold = std::max(norm, 1e-4);
        t += h;
        y.swap(ynew);
        k1.swap(k7);  // FSAL
        if (last) {
          snapshot(target);
          t = target;
          reached = true;
        }
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        h = h / fac;
      } else {
        h = h / std::min(facc1, fac11 / safe);
        if (last) h = std::min(h, target - t);
      }
    }
  }
  return out;
}

TrigInterpolant::TrigInterpolant(const Field& field) : grid_(field.grid) {
  grid_.validate();
  spectrum_ = fft_forward(field.values);
}

double TrigInterpolant::operator()(double x) const {
  const int n = grid_.n;
  const double theta = kTwoPi * (x - grid_.x_range[0]) / grid_.length();
  std::complex<double> rot(std::cos(theta), std::sin(theta));
  std::complex<double> e = rot;
  double acc = spectrum_(0).real();
  for (int m = 1; m < n / 2; ++m) {
    acc += 2.0 * (spectrum_(m) * e).real();
    e *= rot;
  }
  acc += spectrum_(n / 2).real() * std::cos(0.5 * n * theta);
  return acc / n;
}

double evaluate_at(std::span<const Field> fields, double t, double x) {
  if (fields.empty()) throw std::invalid_argument("evaluate_at: no fields");
  const double t0 = fields.front().time, t1 = fields.back().time;
  const double slack = 1e-12 * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));
  if (t < t0 - slack || t > t1 + slack)
    throw std::out_of_range("evaluate_at: time outside the sampled range");

  // Exact time match: interpolate in x only.
  for (const Field& f : fields)
    if (std::abs(f.time - t) <= slack) return TrigInterpolant(f)(x);

  // Bracketing index i with time_i <= t < time_{i+1}.
  std::size_t i = 0;
  while (i + 2 < fields.size() && fields[i + 1].time <= t) ++i;

  // 4-point Lagrange stencil clamped to the sample range.
  std::size_t lo = i > 0 ? i - 1 : 0;
  std::size_t count = std::min<std::size_t>(4, fields.size());
  if (lo + count > fields.size()) lo = fields.size() - count;

  double result = 0.0;
  for (std::size_t a = 0; a < count; ++a) {
    double w = 1.0;
    for (std::size_t b = 0; b < count; ++b) {
      if (a == b) continue;
      w *= (t - fields[lo + b].time) / (fields[lo + a].time - fields[lo + b].time);
    }
    result += w * TrigInterpolant(fields[lo + a])(x);
  }
  return result;
}

Field initial_field(const PdeProblem& problem, int n) {
  if (!problem.ic) throw std::invalid_argument("initial_field: problem has no initial condition");
  Field f;
  f.grid.n = n;
  f.grid.x_range = problem.domain.x_ranges[0];
  f.grid.validate();
  f.time = problem.domain.t_range ? (*problem.domain.t_range)[0] : 0.0;
  f.values.resize(n);
  for (int j = 0; j < n; ++j) f.values(j) = problem.ic(f.grid.node(j));
  return f;
}

}  // namespace pinnopt
