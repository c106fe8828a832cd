#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "ymlab/util.hpp"

namespace ym {

// Small dense complex matrix, scalar-generic so the holonomy machinery can
// run on Dual jets.  Group elements are 1x1 (U(1)) or 2x2 (SU(2)) unitaries.
template <class S, int N>
struct CMat {
  std::array<std::complex<S>, N * N> a{};

  std::complex<S>& operator()(int i, int j) { return a[i * N + j]; }
  const std::complex<S>& operator()(int i, int j) const { return a[i * N + j]; }

  static CMat identity() {
    CMat m;
    for (int i = 0; i < N; ++i) m(i, i) = std::complex<S>(S(1), S(0));
    return m;
  }

  CMat dagger() const {
    CMat m;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) m(i, j) = std::conj((*this)(j, i));
    return m;
  }

  std::complex<S> trace() const {
    std::complex<S> t{};
    for (int i = 0; i < N; ++i) t += (*this)(i, i);
    return t;
  }
};

template <class S, int N>
CMat<S, N> operator*(const CMat<S, N>& x, const CMat<S, N>& y) {
  CMat<S, N> m;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      std::complex<S> s{};
      for (int k = 0; k < N; ++k) s += x(i, k) * y(k, j);
      m(i, j) = s;
    }
  return m;
}

template <class S, int N>
CMat<S, N> operator+(const CMat<S, N>& x, const CMat<S, N>& y) {
  CMat<S, N> m;
  for (int i = 0; i < N * N; ++i) m.a[i] = x.a[i] + y.a[i];
  return m;
}

template <class S, int N>
CMat<S, N> operator-(const CMat<S, N>& x, const CMat<S, N>& y) {
  CMat<S, N> m;
  for (int i = 0; i < N * N; ++i) m.a[i] = x.a[i] - y.a[i];
  return m;
}

template <class S, int N>
CMat<S, N> operator*(S c, const CMat<S, N>& x) {
  CMat<S, N> m;
  for (int i = 0; i < N * N; ++i) m.a[i] = std::complex<S>(c, S(0)) * x.a[i];
  return m;
}

// u(1): one real coefficient in the basis {i}; group elements are phases.
struct U1 {
  static constexpr int dim = 1;
  static constexpr int n = 1;
  static constexpr bool abelian = true;
  static const char* name() { return "u1"; }
};

// su(2): basis e_k = -i sigma_k, orthonormal for <x,y> = -1/2 tr(xy).
// Bracket in coefficients: [x,y] = 2 x cross y.
struct SU2 {
  static constexpr int dim = 3;
  static constexpr int n = 2;
  static constexpr bool abelian = false;
  static const char* name() { return "su2"; }
};

template <class G, class S = double>
using AlgVec = std::array<S, G::dim>;

template <class G, class S = double>
using GroupMat = CMat<S, G::n>;

template <class G> using Alg = AlgVec<G, double>;
template <class G> using GroupElem = GroupMat<G, double>;

template <class G, class S>
AlgVec<G, S> algZero() {
  AlgVec<G, S> z{};
  return z;
}

template <class G, class S>
AlgVec<G, S> bracket(const AlgVec<G, S>& x, const AlgVec<G, S>& y) {
  AlgVec<G, S> r{};
  if constexpr (!G::abelian) {
    r[0] = S(2) * (x[1] * y[2] - x[2] * y[1]);
    r[1] = S(2) * (x[2] * y[0] - x[0] * y[2]);
    r[2] = S(2) * (x[0] * y[1] - x[1] * y[0]);
  }
  return r;
}

template <class G, class S>
S inner(const AlgVec<G, S>& x, const AlgVec<G, S>& y) {
  S s{};
  for (int k = 0; k < G::dim; ++k) s += x[k] * y[k];
  return s;
}

template <class G, class S>
GroupMat<G, S> matForm(const AlgVec<G, S>& x) {
  GroupMat<G, S> m;
  if constexpr (G::abelian) {
    m(0, 0) = std::complex<S>(S(0), x[0]);
  } else {
    m(0, 0) = std::complex<S>(S(0), -x[2]);
    m(0, 1) = std::complex<S>(-x[1], -x[0]);
    m(1, 0) = std::complex<S>(x[1], -x[0]);
    m(1, 1) = std::complex<S>(S(0), x[2]);
  }
  return m;
}

template <class G, class S>
AlgVec<G, S> coeffForm(const GroupMat<G, S>& m) {
  AlgVec<G, S> x{};
  if constexpr (G::abelian) {
    x[0] = m(0, 0).imag();
  } else {
    x[0] = S(-0.5) * (m(0, 1).imag() + m(1, 0).imag());
    x[1] = S(0.5) * (m(1, 0).real() - m(0, 1).real());
    x[2] = S(0.5) * (m(1, 1).imag() - m(0, 0).imag());
  }
  return x;
}

// exp of the matrix form; closed axis-angle form for su(2).
template <class G, class S>
GroupMat<G, S> expmap(const AlgVec<G, S>& x) {
  using std::cos;
  using std::sin;
  GroupMat<G, S> m;
  if constexpr (G::abelian) {
    m(0, 0) = std::complex<S>(cos(x[0]), sin(x[0]));
  } else {
    using std::sqrt;
    const S th2 = inner<G, S>(x, x);
    const S th = sqrt(th2);
    S c, snc;  // cos(th), sin(th)/th
    if (value(th) < 1e-6) {
      c = S(1) - th2 * S(0.5) + th2 * th2 * (S(1) / S(24));
      snc = S(1) - th2 * (S(1) / S(6)) + th2 * th2 * (S(1) / S(120));
    } else {
      c = cos(th);
      snc = sin(th) / th;
    }
    const GroupMat<G, S> xm = matForm<G, S>(x);
    m = snc * xm;
    m(0, 0) += std::complex<S>(c, S(0));
    m(1, 1) += std::complex<S>(c, S(0));
  }
  return m;
}

// Directional derivative of expmap: d/dt exp(x + t xi) = exp(x) * dexp(x, xi).
// dexp(x, xi) = xi - c1(phi) ad_x xi + c2(phi) ad_x^2 xi with phi = 2|x|,
// c1 = (1 - cos phi)/phi^2, c2 = (phi - sin phi)/phi^3.
template <class G, class S>
GroupMat<G, S> dexpFactor(const AlgVec<G, S>& x, const AlgVec<G, S>& xi) {
  using std::cos;
  using std::sin;
  if constexpr (G::abelian) {
    return matForm<G, S>(xi);
  } else {
    using std::sqrt;
    const S phi2 = S(4) * inner<G, S>(x, x);
    const S phi = sqrt(phi2);
    S c1, c2;
    if (value(phi) < 1e-4) {
      c1 = S(0.5) - phi2 * (S(1) / S(24)) + phi2 * phi2 * (S(1) / S(720));
      c2 = (S(1) / S(6)) - phi2 * (S(1) / S(120)) + phi2 * phi2 * (S(1) / S(5040));
    } else {
      c1 = (S(1) - cos(phi)) / phi2;
      c2 = (phi - sin(phi)) / (phi2 * phi);
    }
    const AlgVec<G, S> ad1 = bracket<G, S>(x, xi);
    const AlgVec<G, S> ad2 = bracket<G, S>(x, ad1);
    AlgVec<G, S> v;
    for (int k = 0; k < G::dim; ++k) v[k] = xi[k] - c1 * ad1[k] + c2 * ad2[k];
    return matForm<G, S>(v);
  }
}

template <class G, class S>
GroupMat<G, S> dexp(const AlgVec<G, S>& x, const AlgVec<G, S>& xi) {
  return expmap<G, S>(x) * dexpFactor<G, S>(x, xi);
}

// Principal logarithm (double only; used by the lattice gauge action).
template <class G>
Alg<G> logmap(const GroupElem<G>& g) {
  Alg<G> x{};
  if constexpr (G::abelian) {
    x[0] = std::atan2(g(0, 0).imag(), g(0, 0).real());
  } else {
    // g = cos(th) I + sin(th) n.(-i sigma); antihermitian part isolates n sin(th).
    GroupElem<G> b;
    for (int i = 0; i < 4; ++i) b.a[i] = 0.5 * (g.a[i] - std::conj(g.a[(i % 2) * 2 + i / 2]));
    const Alg<G> s = coeffForm<G, double>(b);
    const double sn = std::sqrt(inner<G, double>(s, s));
    const double cs = 0.5 * g.trace().real();
    const double th = std::atan2(sn, cs);
    if (sn < 1e-14) return x;  // identity (or -identity: branch point, return 0)
    for (int k = 0; k < G::dim; ++k) x[k] = th * s[k] / sn;
  }
  return x;
}

// Coefficients of g^-1 x g (g unitary, so g^-1 = g^dagger).
template <class G, class S>
AlgVec<G, S> adjoint(const GroupMat<G, S>& g, const AlgVec<G, S>& x) {
  if constexpr (G::abelian) {
    return x;
  } else {
    return coeffForm<G, S>(g.dagger() * matForm<G, S>(x) * g);
  }
}

template <class G>
double unitarityDefect(const GroupElem<G>& g) {
  const GroupElem<G> d = g.dagger() * g;
  double m = 0;
  for (int i = 0; i < G::n; ++i)
    for (int j = 0; j < G::n; ++j) {
      const std::complex<double> want = (i == j) ? std::complex<double>(1, 0) : 0;
      m = std::max(m, std::abs(d(i, j) - want));
    }
  return m;
}

}  // namespace ym
