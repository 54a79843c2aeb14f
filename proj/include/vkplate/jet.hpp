#pragma once

// Truncated bivariate Taylor polynomials ("jets").  A Jet<N> holds the
// coefficients c_ij of  sum_{i+j<=N} c_ij dx^i dy^j  around a base point; the
// arithmetic below is exact up to total order N, so partial derivatives of any
// closed-form expression are available as  d^i_x d^j_y f = i! j! c_ij.

#include <array>
#include <cmath>
#include <cstddef>

namespace vkp {

template <int N>
class Jet {
  static_assert(N >= 0 && N <= 8, "jet order out of range");

 public:
  static constexpr int order = N;
  static constexpr std::size_t size = std::size_t((N + 1) * (N + 2) / 2);

  constexpr Jet() : c_{} {}
  constexpr Jet(double v) : c_{} { c_[0] = v; }  // NOLINT: implicit on purpose

  static constexpr std::size_t idx(int i, int j) {
    // graded ordering: degree d = i + j, then by j
    const int d = i + j;
    return std::size_t(d * (d + 1) / 2 + j);
  }

  static Jet variable_x(double x0) { Jet r(x0); if constexpr (N >= 1) r.c_[idx(1, 0)] = 1.0; return r; }
  static Jet variable_y(double y0) { Jet r(y0); if constexpr (N >= 1) r.c_[idx(0, 1)] = 1.0; return r; }

  double value() const { return c_[0]; }
  double coeff(int i, int j) const { return (i < 0 || j < 0 || i + j > N) ? 0.0 : c_[idx(i, j)]; }
  double& coeff_ref(int i, int j) { return c_[idx(i, j)]; }

  // partial derivative d^i/dx^i d^j/dy^j at the base point
  double d(int i, int j) const {
    if (i < 0 || j < 0 || i + j > N) return 0.0;
    return c_[idx(i, j)] * fact(i) * fact(j);
  }

  Jet& operator+=(const Jet& o) { for (std::size_t k = 0; k < size; ++k) c_[k] += o.c_[k]; return *this; }
  Jet& operator-=(const Jet& o) { for (std::size_t k = 0; k < size; ++k) c_[k] -= o.c_[k]; return *this; }
  Jet& operator*=(double s) { for (auto& v : c_) v *= s; return *this; }
  Jet& operator/=(double s) { for (auto& v : c_) v /= s; return *this; }
  Jet& operator*=(const Jet& o) { *this = *this * o; return *this; }
  Jet& operator/=(const Jet& o) { *this = *this / o; return *this; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { for (auto& v : a.c_) v = -v; return a; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator+(Jet a, double s) { a.c_[0] += s; return a; }
  friend Jet operator+(double s, Jet a) { a.c_[0] += s; return a; }
  friend Jet operator-(Jet a, double s) { a.c_[0] -= s; return a; }
  friend Jet operator-(double s, const Jet& a) { return s + (-a); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int da = 0; da <= N; ++da)
      for (int ja = 0; ja <= da; ++ja) {
        const double ca = a.c_[idx(da - ja, ja)];
        if (ca == 0.0) continue;
        for (int db = 0; db + da <= N; ++db)
          for (int jb = 0; jb <= db; ++jb)
            r.c_[idx(da - ja + db - jb, ja + jb)] += ca * b.c_[idx(db - jb, jb)];
      }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

  // f(a) from the derivatives f(a0), f'(a0), ..., f^(N)(a0)
  template <class Derivs>
  static Jet compose(const Jet& a, const Derivs& fd) {
    Jet h = a;
    h.c_[0] = 0.0;
    Jet r(fd[0]);
    Jet p(1.0);
    double kf = 1.0;
    for (int k = 1; k <= N; ++k) {
      p = p * h;
      kf *= k;
      r += p * (fd[std::size_t(k)] / kf);
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double a0 = a.c_[0];
    std::array<double, N + 1> fd{};
    double v = 1.0 / a0, s = 1.0;
    for (int k = 0; k <= N; ++k) { fd[std::size_t(k)] = s * v; v /= a0; s *= -(k + 1); }
    return compose(a, fd);
  }

 private:
  static constexpr double fact(int n) { double r = 1.0; for (int k = 2; k <= n; ++k) r *= k; return r; }
  std::array<double, size> c_;
};

template <int N>
Jet<N> exp(const Jet<N>& a) {
  std::array<double, N + 1> fd;
  fd.fill(std::exp(a.value()));
  return Jet<N>::compose(a, fd);
}

template <int N>
Jet<N> log(const Jet<N>& a) {
  const double a0 = a.value();
  std::array<double, N + 1> fd{};
  fd[0] = std::log(a0);
  double v = 1.0 / a0, s = 1.0;
  for (int k = 1; k <= N; ++k) { fd[std::size_t(k)] = s * v; v /= a0; s *= -k; }
  return Jet<N>::compose(a, fd);
}

template <int N>
Jet<N> sin(const Jet<N>& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  std::array<double, N + 1> fd{};
  const double cyc[4] = {s, c, -s, -c};
  for (int k = 0; k <= N; ++k) fd[std::size_t(k)] = cyc[k % 4];
  return Jet<N>::compose(a, fd);
}

template <int N>
Jet<N> cos(const Jet<N>& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  std::array<double, N + 1> fd{};
  const double cyc[4] = {c, -s, -c, s};
  for (int k = 0; k <= N; ++k) fd[std::size_t(k)] = cyc[k % 4];
  return Jet<N>::compose(a, fd);
}

template <int N>
Jet<N> pow(const Jet<N>& a, double p) {
  const double a0 = a.value();
  std::array<double, N + 1> fd{};
  double coef = 1.0;
  for (int k = 0; k <= N; ++k) {
    fd[std::size_t(k)] = coef * std::pow(a0, p - k);
    coef *= (p - k);
  }
  return Jet<N>::compose(a, fd);
}

template <int N>
Jet<N> sqrt(const Jet<N>& a) { return pow(a, 0.5); }

template <int N>
Jet<N> atan(const Jet<N>& a) {
  // derivatives of atan from the rational recursion on 1/(1+x^2)
  const double x = a.value();
  std::array<double, N + 1> fd{};
  fd[0] = std::atan(x);
  if constexpr (N >= 1) {
    // d^k/dx^k atan(x) = (k-1)! cos^k(t) sin(k (t + pi/2)) with t = atan(x)
    const double t = std::atan(x), ct = std::cos(t);
    double kf = 1.0, ck = ct;
    for (int k = 1; k <= N; ++k) {
      fd[std::size_t(k)] = kf * ck * std::sin(k * (t + 1.57079632679489661923));
      kf *= k;
      ck *= ct;
    }
  }
  return Jet<N>::compose(a, fd);
}

// Partial derivative of a jet: exact up to order N-1.
template <int N>
Jet<N - 1> dx(const Jet<N>& a) {
  static_assert(N >= 1, "cannot differentiate an order-0 jet");
  Jet<N - 1> r;
  for (int d = 0; d <= N - 1; ++d)
    for (int j = 0; j <= d; ++j) r.coeff_ref(d - j, j) = (d - j + 1) * a.coeff(d - j + 1, j);
  return r;
}

template <int N>
Jet<N - 1> dy(const Jet<N>& a) {
  static_assert(N >= 1, "cannot differentiate an order-0 jet");
  Jet<N - 1> r;
  for (int d = 0; d <= N - 1; ++d)
    for (int j = 0; j <= d; ++j) r.coeff_ref(d - j, j) = (j + 1) * a.coeff(d - j, j + 1);
  return r;
}

// Drop coefficients above order M.
template <int M, int N>
Jet<M> truncate(const Jet<N>& a) {
  static_assert(M <= N, "truncate cannot raise the order");
  Jet<M> r;
  for (int d = 0; d <= M; ++d)
    for (int j = 0; j <= d; ++j) r.coeff_ref(d - j, j) = a.coeff(d - j, j);
  return r;
}

using Jet4 = Jet<4>;

}  // namespace vkp
