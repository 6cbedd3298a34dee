#pragma once

// Truncated Taylor series arithmetic. A Jet<S, N> holds the coefficients
// c[0..N] of f(u0 + h) = sum c[j] h^j, so f^(j)(u0) = j! c[j].
// S may be a real type or std::complex of one.

#include <array>
#include <cmath>
#include <complex>

namespace fwdsmile {

template <class S, int N = 4>
struct Jet {
  std::array<S, N + 1> c{};

  Jet() = default;
  Jet(S v) { c[0] = v; }  // NOLINT: implicit constants are the point

  static Jet variable(S u0) {
    Jet j(u0);
    if constexpr (N >= 1) j.c[1] = S(1);
    return j;
  }

  S value() const { return c[0]; }

  // j-th derivative
  S deriv(int j) const {
    S f = S(1);
    for (int i = 2; i <= j; ++i) f *= S(i);
    return c[j] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (int i = 0; i <= N; ++i) c[i] += o.c[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i <= N; ++i) c[i] -= o.c[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator-(const Jet& a) {
    Jet r;
    for (int i = 0; i <= N; ++i) r.c[i] = -a.c[i];
    return r;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= N; ++k) {
      S s = S(0);
      for (int i = 0; i <= k; ++i) s += a.c[i] * b.c[k - i];
      r.c[k] = s;
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= N; ++k) {
      S s = a.c[k];
      for (int i = 1; i <= k; ++i) s -= b.c[i] * r.c[k - i];
      r.c[k] = s / b.c[0];
    }
    return r;
  }
};

template <class S, int N>
Jet<S, N> exp(const Jet<S, N>& a) {
  using std::exp;
  Jet<S, N> r;
  r.c[0] = exp(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    S s = S(0);
    for (int i = 1; i <= k; ++i) s += S(i) * a.c[i] * r.c[k - i];
    r.c[k] = s / S(k);
  }
  return r;
}

template <class S, int N>
Jet<S, N> log(const Jet<S, N>& a) {
  using std::log;
  Jet<S, N> r;
  r.c[0] = log(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    S s = a.c[k];
    for (int i = 1; i < k; ++i) s -= S(i) * r.c[i] * a.c[k - i] / S(k);
    r.c[k] = s / a.c[0];
  }
  return r;
}

template <class S, int N>
Jet<S, N> sqrt(const Jet<S, N>& a) {
  using std::sqrt;
  Jet<S, N> r;
  r.c[0] = sqrt(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    S s = a.c[k];
    for (int i = 1; i < k; ++i) s -= r.c[i] * r.c[k - i];
    r.c[k] = s / (S(2) * r.c[0]);
  }
  return r;
}

// sin and cos share one recurrence
template <class S, int N>
void sincos(const Jet<S, N>& a, Jet<S, N>& s, Jet<S, N>& co) {
  using std::cos;
  using std::sin;
  s.c[0] = sin(a.c[0]);
  co.c[0] = cos(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    S ss = S(0), cc = S(0);
    for (int i = 1; i <= k; ++i) {
      ss += S(i) * a.c[i] * co.c[k - i];
      cc -= S(i) * a.c[i] * s.c[k - i];
    }
    s.c[k] = ss / S(k);
    co.c[k] = cc / S(k);
  }
}

template <class S, int N>
Jet<S, N> sin(const Jet<S, N>& a) {
  Jet<S, N> s, c;
  sincos(a, s, c);
  return s;
}

template <class S, int N>
Jet<S, N> cos(const Jet<S, N>& a) {
  Jet<S, N> s, c;
  sincos(a, s, c);
  return c;
}

// Real part of every coefficient.
template <class T, int N>
Jet<T, N> real(const Jet<std::complex<T>, N>& a) {
  Jet<T, N> r;
  for (int i = 0; i <= N; ++i) r.c[i] = a.c[i].real();
  return r;
}

template <class T, int N>
Jet<std::complex<T>, N> complexify(const Jet<T, N>& a) {
  Jet<std::complex<T>, N> r;
  for (int i = 0; i <= N; ++i) r.c[i] = a.c[i];
  return r;
}

using Jet4 = Jet<double, 4>;
using CJet4 = Jet<std::complex<double>, 4>;

}  // namespace fwdsmile
