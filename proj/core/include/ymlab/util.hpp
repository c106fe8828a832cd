#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ym {

// First-order jet a + eps*b.  Running a derivative-exact algorithm on Dual
// inputs yields the directional derivative of its output in the b slots.
struct Dual {
  double a = 0.0;  // value
  double b = 0.0;  // derivative
  Dual() = default;
  Dual(double v) : a(v) {}
  Dual(double v, double d) : a(v), b(d) {}
};

inline Dual operator+(Dual x, Dual y) { return {x.a + y.a, x.b + y.b}; }
inline Dual operator-(Dual x, Dual y) { return {x.a - y.a, x.b - y.b}; }
inline Dual operator-(Dual x) { return {-x.a, -x.b}; }
inline Dual operator*(Dual x, Dual y) { return {x.a * y.a, x.a * y.b + x.b * y.a}; }
inline Dual operator/(Dual x, Dual y) {
  const double inv = 1.0 / y.a;
  return {x.a * inv, (x.b - x.a * y.b * inv) * inv};
}
inline Dual& operator+=(Dual& x, Dual y) { x = x + y; return x; }
inline Dual& operator-=(Dual& x, Dual y) { x = x - y; return x; }
inline Dual& operator*=(Dual& x, Dual y) { x = x * y; return x; }
inline bool operator<(Dual x, Dual y) { return x.a < y.a; }
inline bool operator>(Dual x, Dual y) { return x.a > y.a; }

inline Dual sin(Dual x) { return {std::sin(x.a), x.b * std::cos(x.a)}; }
inline Dual cos(Dual x) { return {std::cos(x.a), -x.b * std::sin(x.a)}; }
inline Dual sqrt(Dual x) {
  const double r = std::sqrt(x.a);
  return {r, r > 0.0 ? 0.5 * x.b / r : 0.0};
}

inline double value(double x) { return x; }
inline double value(Dual x) { return x.a; }
inline double deriv(double) { return 0.0; }
inline double deriv(Dual x) { return x.b; }

// Deterministic per-job seed derivation (splitmix64 step).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

inline Rng makeRng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(splitmix64(seed ^ splitmix64(stream + 1)));
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool degenerate = false;
};

// Ordinary least squares y ~ slope*x + intercept.
inline LineFit fitLine(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n < 3) {
    f.degenerate = true;
    return f;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  const double vary = n * syy - sy * sy;
  if (std::abs(den) < 1e-300 || vary < 1e-300) {
    f.degenerate = true;
    return f;
  }
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ssres = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    ssres += e * e;
  }
  f.r2 = 1.0 - ssres / (vary / n);
  return f;
}

// Composite Simpson on uniformly spaced samples; trapezoid fallback on the
// last interval when the count is even.
inline double simpson(const std::vector<double>& y, double dx) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * dx * (y[0] + y[1]);
  double s = 0.0;
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) s += dx / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
  if (i + 1 < n) s += 0.5 * dx * (y[i] + y[i + 1]);
  return s;
}

}  // namespace ym
