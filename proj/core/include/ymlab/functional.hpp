#pragma once

#include "ymlab/perturbation.hpp"

namespace ym {

// A point of the configuration space: connection 1-form plus ad-valued 0-form.
template <class G>
struct Configuration {
  Field1<G> A;
  Field0<G> omega;

  Configuration() = default;
  explicit Configuration(const TorusGrid& g) : A(g), omega(g) {}
  const TorusGrid& grid() const { return *A.grid; }
};

// J(A, omega) = <F_A, *omega> - 1/2 |omega|^2 integrated with grid weights.
template <class G>
double evalJ(const Configuration<G>& cfg) {
  const Field0<G> sF = hodge2(curvature(cfg.A));
  return innerL2(sF, cfg.omega) - 0.5 * innerL2(cfg.omega, cfg.omega);
}

template <class G>
double evalYM(const Field1<G>& A) {
  const Field2<G> f = curvature(A);
  return 0.5 * innerL2(f, f);
}

// J + h_f.
template <class G>
double evalAction(const Configuration<G>& cfg, const PerturbationSpec& pert) {
  return evalJ(cfg) + evalPerturbation(cfg.grid(), cfg.A, cfg.omega, pert);
}

template <class G>
struct GradientValue {
  Field1<G> gA;   // continuum -*d_A omega - X_f, realized as the exact transpose
  Field0<G> gOm;  // *F_A - omega + Y_f
};

// Exact L2 gradient of J + h_f: directional derivatives of the discrete
// functional match <grad, xi> to round-off.
template <class G>
GradientValue<G> gradient(const Configuration<G>& cfg, const PerturbationSpec& pert) {
  GradientValue<G> g;
  g.gA = coD2(cfg.A, hodge0(cfg.omega));
  g.gOm = hodge2(curvature(cfg.A));
  g.gOm.c -= cfg.omega.c;
  if (!pert.empty()) {
    const auto p = holonomyPerturbation(cfg.grid(), cfg.A, cfg.omega, pert);
    g.gA.c1 -= p.X.c1;
    g.gA.c2 -= p.X.c2;
    g.gOm.c += p.Y.c;
  }
  return g;
}

template <class G>
double gradientNorm(const Configuration<G>& cfg, const PerturbationSpec& pert) {
  const auto g = gradient(cfg, pert);
  return std::sqrt(innerL2(g.gA, g.gA) + innerL2(g.gOm, g.gOm));
}

template <class G>
double gradientNormInf(const Configuration<G>& cfg, const PerturbationSpec& pert) {
  const auto g = gradient(cfg, pert);
  double m = g.gOm.c.abs().maxCoeff();
  m = std::max(m, g.gA.c1.abs().maxCoeff());
  m = std::max(m, g.gA.c2.abs().maxCoeff());
  return m;
}

template <class G>
struct HessianRows {
  Field1<G> r1;
  Field0<G> r2;
};

// Exact Hessian of J + h_f applied to (alpha, v); rows 1-2 of the linearized
// flow operator.
template <class G>
HessianRows<G> hessianApply(const Configuration<G>& cfg, const PerturbationSpec& pert,
                            const Field1<G>& alpha, const Field0<G>& v) {
  HessianRows<G> h;
  h.r1 = starBracket1(cfg.omega, alpha);
  const Field1<G> t = coD2(cfg.A, hodge0(v));
  h.r1.c1 += t.c1;
  h.r1.c2 += t.c2;
  h.r2 = hodge2(covD1(cfg.A, alpha));
  h.r2.c -= v.c;
  if (!pert.empty()) {
    const auto dp = applyPerturbationHessian(cfg.grid(), cfg.A, cfg.omega, pert, alpha, v);
    h.r1.c1 -= dp.dX.c1;
    h.r1.c2 -= dp.dX.c2;
    h.r2.c += dp.dY.c;
  }
  return h;
}

// ---- gauge action ----

template <class G>
struct GaugeField {
  const TorusGrid* grid = nullptr;
  std::vector<GroupElem<G>> g;

  GaugeField() = default;
  explicit GaugeField(const TorusGrid& gr) : grid(&gr), g(gr.sites(), GroupElem<G>::identity()) {}
};

template <class G>
GaugeField<G> gaugeFromAlgebra(const Field0<G>& xi) {
  GaugeField<G> gf(*xi.grid);
  for (int z = 0; z < xi.grid->sites(); ++z) gf.g[z] = expmap<G, double>(xi.at(z));
  return gf;
}

template <class G>
GaugeField<G> constantGauge(const TorusGrid& gr, const Alg<G>& xi) {
  GaugeField<G> gf(gr);
  const auto e = expmap<G, double>(xi);
  for (auto& gz : gf.g) gz = e;
  return gf;
}

// Lattice gauge action: edge components by adjoint plus the discrete
// logarithmic derivative of g; 0-forms by adjoint.
template <class G>
Configuration<G> gaugeAct(const GaugeField<G>& gf, const Configuration<G>& cfg) {
  const auto& gr = cfg.grid();
  Configuration<G> out(gr);
  for (int z = 0; z < gr.sites(); ++z) {
    const auto& gz = gf.g[z];
    Alg<G> a1 = adjoint<G, double>(gz, cfg.A.at1(z));
    Alg<G> a2 = adjoint<G, double>(gz, cfg.A.at2(z));
    const Alg<G> m1 = logmap<G>(gz.dagger() * gf.g[gr.ixp[z]]);
    const Alg<G> m2 = logmap<G>(gz.dagger() * gf.g[gr.iyp[z]]);
    for (int k = 0; k < G::dim; ++k) {
      out.A.c1(k, z) = a1[k] + m1[k] / gr.hx;
      out.A.c2(k, z) = a2[k] + m2[k] / gr.hy;
    }
    out.omega.set(z, adjoint<G, double>(gz, cfg.omega.at(z)));
  }
  return out;
}

template <class G>
Field0<G> gaugeAct0(const GaugeField<G>& gf, const Field0<G>& f) {
  Field0<G> out(*f.grid);
  for (int z = 0; z < f.grid->sites(); ++z) out.set(z, adjoint<G, double>(gf.g[z], f.at(z)));
  return out;
}

// ---- energy density and temporal paths ----

// Gauge-invariant energy density: 1/2 (|d_A Psi - grad_A|^2 + |grad_om + [Psi,om]|^2)
// pointwise; on solutions equals 1/2 (|ds A|^2 + |nabla_s om|^2).
template <class G>
Eigen::ArrayXd energyDensity(const Configuration<G>& cfg, const Field0<G>& psi,
                             const PerturbationSpec& pert) {
  const auto& gr = cfg.grid();
  const auto g = gradient(cfg, pert);
  Field1<G> r1 = covD0(cfg.A, psi);
  r1.c1 -= g.gA.c1;
  r1.c2 -= g.gA.c2;
  Field0<G> r0 = bracketField(psi, cfg.omega);
  r0.c += g.gOm.c;
  Eigen::ArrayXd e(gr.sites());
  const Eigen::ArrayXd n1 = (r1.c1.square() + r1.c2.square()).colwise().sum();
  const Eigen::ArrayXd n0 = r0.c.square().colwise().sum();
  e = 0.5 * (n1 * gr.em2u + n0);
  return e;
}

template <class G>
struct TemporalPath {
  const TorusGrid* grid = nullptr;
  double s0 = 0.0;  // first slice parameter
  double ds = 0.0;
  std::vector<Configuration<G>> cfg;
  std::vector<Field0<G>> psi;
  double residual = 0.0;

  int slices() const { return static_cast<int>(cfg.size()); }
  double s(int k) const { return s0 + k * ds; }
};

template <class G>
TemporalPath<G> constantPath(const Configuration<G>& c, double S, int M) {
  TemporalPath<G> p;
  p.grid = c.A.grid;
  p.s0 = -S;
  p.ds = 2 * S / (M - 1);
  p.cfg.assign(M, c);
  p.psi.assign(M, Field0<G>(*c.A.grid));
  return p;
}

template <class G>
struct TrajectoryEnergy {
  double energy = 0.0;      // s-quadrature of the energy density integral
  double actionDrop = 0.0;  // (J + h_f)(start) - (J + h_f)(end)
};

template <class G>
TrajectoryEnergy<G> trajectoryEnergy(const TemporalPath<G>& path, const PerturbationSpec& pert) {
  TrajectoryEnergy<G> out;
  const auto& gr = *path.grid;
  std::vector<double> integrand(path.slices());
  for (int k = 0; k < path.slices(); ++k) {
    const Eigen::ArrayXd e = energyDensity(path.cfg[k], path.psi[k], pert);
    integrand[k] = (e * gr.e2u).sum() * gr.hx * gr.hy;
  }
  out.energy = simpson(integrand, path.ds);
  out.actionDrop = evalAction(path.cfg.front(), pert) - evalAction(path.cfg.back(), pert);
  return out;
}

// Coordinate-descent gauge alignment: returns g minimizing the L2 distance
// of g*cfg to ref over site group elements (a few sweeps of local updates).
template <class G>
GaugeField<G> gaugeAlign(const Configuration<G>& cfg, const Configuration<G>& ref,
                         int sweeps = 6);

template <class G>
double configDistance(const Configuration<G>& a, const Configuration<G>& b) {
  double d = 0;
  Field1<G> da = a.A;
  da.c1 -= b.A.c1;
  da.c2 -= b.A.c2;
  Field0<G> dw = a.omega;
  dw.c -= b.omega.c;
  d = innerL2(da, da) + innerL2(dw, dw);
  return std::sqrt(std::max(0.0, d));
}

}  // namespace ym
