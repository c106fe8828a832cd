#pragma once

// Shared fixtures for tests: the u(1) double-cosine Wilson model on the flat
// moduli torus and its reduced 2d oracle.

#include <array>
#include <cmath>
#include <vector>

#include "ymlab/critical.hpp"

namespace ymtest {

using namespace ym;

// h_f = -eps (cos Theta_1 + cos Theta_2) realized by one x-cycle and one
// y-cycle with weight -1.
inline PerturbationSpec cosCosPert(const TorusGrid& g, double eps, int xrow = 0, int ycol = 0) {
  PerturbationSpec p;
  p.amplitude = eps;
  p.loops.push_back(cycleX(g, xrow, -1.0));
  p.loops.push_back(cycleY(g, ycol, -1.0));
  return p;
}

// Flat configuration with holonomy angles (t1, t2): A1 = t1/Lx, A2 = t2/Ly.
inline Configuration<U1> flatConfig(const TorusGrid& g, double t1, double t2) {
  Configuration<U1> c(g);
  c.A.c1.setConstant(t1 / g.lx);
  c.A.c2.setConstant(t2 / g.ly);
  return c;
}

// Embed a u(1) configuration into su(2) along the e3 direction.
inline Configuration<SU2> embedSU2(const Configuration<U1>& c) {
  Configuration<SU2> o(*c.A.grid);
  o.A.c1.row(2) = c.A.c1.row(0);
  o.A.c2.row(2) = c.A.c2.row(0);
  o.omega.c.row(2) = c.omega.c.row(0);
  return o;
}

// Reduced model R(t1, t2) = -eps (cos t1 + cos t2) on the 2-torus.
struct ReducedCosModel {
  double eps;

  struct Crit {
    double t1, t2;
    int index;
    double value;
  };

  std::vector<Crit> criticalPoints() const {
    std::vector<Crit> v;
    for (int i : {0, 1})
      for (int j : {0, 1}) {
        Crit c;
        c.t1 = i * M_PI;
        c.t2 = j * M_PI;
        c.index = i + j;
        c.value = -eps * (std::cos(c.t1) + std::cos(c.t2));
        v.push_back(c);
      }
    return v;
  }

  // Number of negative-gradient trajectories between critical points with
  // index difference one.  The flow decouples into two pendulum equations:
  // each saddle connects to the adjacent extremum along its unstable circle
  // through both half-circles, so every count is 2.
  int trajectoryCount(const Crit& from, const Crit& to) const {
    if (from.index != to.index + 1) return 0;
    int moved = 0;
    const bool m1 = std::abs(from.t1 - to.t1) > 1e-9;
    const bool m2 = std::abs(from.t2 - to.t2) > 1e-9;
    moved = (m1 ? 1 : 0) + (m2 ? 1 : 0);
    if (moved != 1) return 0;  // both angles changing needs index drop 2
    return 2;
  }

  // Z2 betti numbers of the sublevel complex below level a.
  std::array<int, 3> betti(double a) const {
    std::array<int, 3> gens{0, 0, 0};
    for (const auto& c : criticalPoints())
      if (c.value < a) ++gens[c.index];
    // All mod-2 boundary counts vanish (two trajectories per pair).
    return gens;
  }
};

}  // namespace ymtest
