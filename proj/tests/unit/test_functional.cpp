#include <doctest.h>

#include "ymlab/functional.hpp"

using namespace ym;

namespace {

template <class G>
Configuration<G> randomConfig(const TorusGrid& g, Rng& rng, double amp = 0.3) {
  Configuration<G> c(g);
  c.A = randomField1<G>(g, rng, 2, amp);
  c.omega = randomField0<G>(g, rng, 2, amp);
  return c;
}

template <class G>
PerturbationSpec twoCosinePert(const TorusGrid& g, double eps, int winding = 0) {
  PerturbationSpec p;
  p.amplitude = eps;
  p.loops.push_back(cycleX(g, 0, -1.0, Profile::ReTrace, winding));
  p.loops.push_back(cycleY(g, 0, -1.0, Profile::ReTrace));
  return p;
}

// Central-difference directional derivative of the action.
template <class G>
double fdDirectional(const Configuration<G>& cfg, const PerturbationSpec& pert,
                     const Field1<G>& da, const Field0<G>& dw, double t) {
  Configuration<G> p = cfg, m = cfg;
  p.A.c1 += t * da.c1;
  p.A.c2 += t * da.c2;
  p.omega.c += t * dw.c;
  m.A.c1 -= t * da.c1;
  m.A.c2 -= t * da.c2;
  m.omega.c -= t * dw.c;
  return (evalAction(p, pert) - evalAction(m, pert)) / (2 * t);
}

}  // namespace

TEST_CASE("evalJ and evalYM closed forms") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  Configuration<U1> cfg(g);
  CHECK(evalJ(cfg) == 0.0);

  cfg.omega.c.setConstant(0.4);
  CHECK(evalJ(cfg) == doctest::Approx(-0.5 * 0.16 * g.lx * g.ly).epsilon(1e-13));

  // omega = *F_A gives J = YM for any A.
  auto rng = makeRng(51);
  for (int rep = 0; rep < 5; ++rep) {
    Configuration<SU2> c(g);
    c.A = randomField1<SU2>(g, rng, 2, 0.5);
    c.omega = hodge2(curvature(c.A));
    CHECK(std::abs(evalJ(c) - evalYM(c.A)) <= 1e-12 * (1.0 + std::abs(evalYM(c.A))));
  }

  // Abelian A2 = f(x): YM = 1/2 sum (forward difference)^2 * cell.
  Field1<U1> A(g);
  for (int z = 0; z < g.sites(); ++z) A.c2(0, z) = std::sin(2 * M_PI * g.siteX(z) / double(g.nx));
  double want = 0;
  for (int z = 0; z < g.sites(); ++z) {
    const double d = (A.c2(0, g.ixp[z]) - A.c2(0, z)) / g.hx;
    want += 0.5 * d * d * g.hx * g.hy;
  }
  CHECK(evalYM(A) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("energy inequality J <= YM with equality iff omega = *F") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(52);
  for (int rep = 0; rep < 1000; ++rep) {
    const bool su2 = rep % 2;
    if (su2) {
      auto c = randomConfig<SU2>(g, rng, 0.6);
      CHECK(evalJ(c) <= evalYM(c.A) + 1e-12);
    } else {
      auto c = randomConfig<U1>(g, rng, 0.6);
      CHECK(evalJ(c) <= evalYM(c.A) + 1e-12);
      Field0<U1> d = c.omega;
      d.c -= hodge2(curvature(c.A)).c;
      const double gapJ = evalYM(c.A) - evalJ(c);
      CHECK(gapJ == doctest::Approx(0.5 * innerL2(d, d)).epsilon(1e-10));
    }
  }
}

TEST_CASE("holonomy values: identity and abelian closed form") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  // SU(2) at A = 0: every holonomy is the identity, Re tr = 2.
  {
    Configuration<SU2> cfg(g);
    PerturbationSpec p;
    p.amplitude = 1.0;
    p.loops.push_back(cycleX(g, 2, 0.7));
    p.loops.push_back(cycleY(g, 3, -0.3));
    CHECK(evalPerturbation(g, cfg.A, cfg.omega, p) == doctest::Approx(2.0 * (0.7 - 0.3)));
  }
  // U(1), x-cycle with A1 = c: holonomy e^{i c Lx}, profile cos(c Lx).
  {
    Configuration<U1> cfg(g);
    cfg.A.c1.setConstant(0.37);
    PerturbationSpec p;
    p.amplitude = 1.0;
    p.loops.push_back(cycleX(g, 5, 2.0));
    CHECK(evalPerturbation(g, cfg.A, cfg.omega, p) ==
          doctest::Approx(2.0 * std::cos(0.37 * g.lx)).epsilon(1e-12));
    // t-winding at A = 0: rho = exp(i w omega(b)).
    Configuration<U1> cw(g);
    cw.omega.c.setConstant(0.21);
    PerturbationSpec pw;
    pw.amplitude = 1.0;
    pw.loops.push_back(cycleX(g, 0, 1.0, Profile::ReTrace, 2));
    CHECK(evalPerturbation(g, cw.A, cw.omega, pw) == doctest::Approx(std::cos(2 * 0.21)));
  }
}

TEST_CASE("perturbation gradient matches finite differences") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(53);
  auto runCase = [&](auto group, int winding, Profile prof) {
    using G = decltype(group);
    auto cfg = randomConfig<G>(g, rng, 0.4);
    PerturbationSpec p;
    p.amplitude = 0.8;
    p.loops.push_back(cycleX(g, 1, 1.3, prof, winding));
    p.loops.push_back(rectangleLoop(g, 2, 2, 3, 2, -0.7, prof, 0));
    const auto pv = holonomyPerturbation(g, cfg.A, cfg.omega, p);
    for (int rep = 0; rep < 10; ++rep) {
      const auto da = randomField1<G>(g, rng, 2, 1.0);
      const auto dw = randomField0<G>(g, rng, 2, 1.0);
      Configuration<G> cp = cfg, cm = cfg;
      const double t = 1e-5;
      cp.A.c1 += t * da.c1; cp.A.c2 += t * da.c2; cp.omega.c += t * dw.c;
      cm.A.c1 -= t * da.c1; cm.A.c2 -= t * da.c2; cm.omega.c -= t * dw.c;
      const double fd = (evalPerturbation(g, cp.A, cp.omega, p) -
                         evalPerturbation(g, cm.A, cm.omega, p)) / (2 * t);
      const double an = -innerL2(pv.X, da) + innerL2(pv.Y, dw);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
  };
  runCase(U1{}, 0, Profile::ReTrace);
  runCase(U1{}, 1, Profile::ReTrace);
  runCase(SU2{}, 0, Profile::ReTraceSq);
  runCase(SU2{}, 2, Profile::ReTrace);
}

TEST_CASE("gradient: critical point and directional consistency") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(54);

  // Unperturbed critical point A=0, omega=0.
  {
    Configuration<SU2> cfg(g);
    CHECK(gradientNorm(cfg, PerturbationSpec{}) == 0.0);
  }

  // Directional consistency including t-winding perturbations.
  auto checkGroup = [&](auto group, int winding) {
    using G = decltype(group);
    auto cfg = randomConfig<G>(g, rng, 0.4);
    const auto pert = twoCosinePert<G>(g, 0.5, winding);
    const auto gr = gradient(cfg, pert);
    for (int rep = 0; rep < 20; ++rep) {
      const auto da = randomField1<G>(g, rng, 2, 1.0);
      const auto dw = randomField0<G>(g, rng, 2, 1.0);
      const double an = innerL2(gr.gA, da) + innerL2(gr.gOm, dw);
      const double fd = fdDirectional(cfg, pert, da, dw, 1e-5);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
  };
  checkGroup(U1{}, 0);
  checkGroup(U1{}, 1);
  checkGroup(SU2{}, 0);
  checkGroup(SU2{}, 1);
}

TEST_CASE("hessian apply is the exact derivative of the gradient") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(55);
  auto cfg = randomConfig<SU2>(g, rng, 0.4);
  const auto pert = twoCosinePert<SU2>(g, 0.5, 1);
  for (int rep = 0; rep < 5; ++rep) {
    const auto a = randomField1<SU2>(g, rng, 2, 1.0);
    const auto v = randomField0<SU2>(g, rng, 2, 1.0);
    const auto h = hessianApply(cfg, pert, a, v);
    const double t = 1e-6;
    Configuration<SU2> cp = cfg, cm = cfg;
    cp.A.c1 += t * a.c1; cp.A.c2 += t * a.c2; cp.omega.c += t * v.c;
    cm.A.c1 -= t * a.c1; cm.A.c2 -= t * a.c2; cm.omega.c -= t * v.c;
    const auto gp = gradient(cp, pert);
    const auto gm = gradient(cm, pert);
    const double e1 = ((gp.gA.c1 - gm.gA.c1) / (2 * t) - h.r1.c1).abs().maxCoeff();
    const double e2 = ((gp.gA.c2 - gm.gA.c2) / (2 * t) - h.r1.c2).abs().maxCoeff();
    const double e3 = ((gp.gOm.c - gm.gOm.c) / (2 * t) - h.r2.c).abs().maxCoeff();
    CHECK(std::max({e1, e2, e3}) < 1e-5);
  }
}

TEST_CASE("gauge action") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(56);

  // Identity gauge leaves everything unchanged.
  {
    auto cfg = randomConfig<SU2>(g, rng, 0.4);
    GaugeField<SU2> id(g);
    const auto out = gaugeAct(id, cfg);
    CHECK(configDistance(out, cfg) < 1e-14);
  }

  // U(1): J, YM, h_f exactly invariant under arbitrary smooth gauge fields.
  {
    auto cfg = randomConfig<U1>(g, rng, 0.4);
    const auto pert = twoCosinePert<U1>(g, 0.5, 1);
    const auto xi = randomField0<U1>(g, rng, 2, 0.5);
    const auto gf = gaugeFromAlgebra(xi);
    const auto out = gaugeAct(gf, cfg);
    CHECK(std::abs(evalJ(out) - evalJ(cfg)) < 1e-10 * (1 + std::abs(evalJ(cfg))));
    CHECK(std::abs(evalYM(out.A) - evalYM(cfg.A)) < 1e-10);
    CHECK(std::abs(evalAction(out, pert) - evalAction(cfg, pert)) < 1e-10);
  }

  // SU(2), constant gauge: exact equivariance of curvature and invariance.
  {
    auto cfg = randomConfig<SU2>(g, rng, 0.4);
    const auto pert = twoCosinePert<SU2>(g, 0.5, 0);
    auto rnd = makeRng(57);
    std::normal_distribution<double> nd;
    Alg<SU2> xi{nd(rnd), nd(rnd), nd(rnd)};
    const auto gf = constantGauge<SU2>(g, xi);
    const auto out = gaugeAct(gf, cfg);
    const auto Fin = curvature(cfg.A);
    const auto Fout = curvature(out.A);
    double err = 0;
    for (int z = 0; z < g.sites(); ++z) {
      Alg<SU2> f{};
      for (int k = 0; k < 3; ++k) f[k] = Fin.c(k, z);
      const auto ad = adjoint<SU2, double>(gf.g[z], f);
      for (int k = 0; k < 3; ++k) err = std::max(err, std::abs(Fout.c(k, z) - ad[k]));
    }
    CHECK(err < 1e-12);
    CHECK(std::abs(evalJ(out) - evalJ(cfg)) < 1e-10);
    CHECK(std::abs(evalAction(out, pert) - evalAction(cfg, pert)) < 1e-10);
  }

  // SU(2), smooth non-constant gauge: the lattice action is covariant only
  // to discretization order; the defect shrinks under refinement.
  {
    double defect[2];
    for (int i = 0; i < 2; ++i) {
      const int n = i == 0 ? 8 : 32;
      TorusGrid gg(n, n, 2 * M_PI, 2 * M_PI);
      auto rr = makeRng(58);
      auto cfg = randomConfig<SU2>(gg, rr, 0.3);
      const auto xi = randomField0<SU2>(gg, rr, 1, 0.05);
      const auto out = gaugeAct(gaugeFromAlgebra(xi), cfg);
      defect[i] = std::abs(evalJ(out) - evalJ(cfg));
    }
    CHECK(defect[1] < 0.5 * defect[0]);
  }
}

TEST_CASE("gradient is orthogonal to gauge orbit directions") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(59);

  // U(1): exact for arbitrary phi (abelian lattice action is exact).
  {
    auto cfg = randomConfig<U1>(g, rng, 0.4);
    const auto pert = twoCosinePert<U1>(g, 0.5, 1);
    const auto gr = gradient(cfg, pert);
    for (int rep = 0; rep < 20; ++rep) {
      const auto phi = randomField0<U1>(g, rng, 2, 1.0);
      const double ip = innerL2(gr.gA, covD0(cfg.A, phi)) +
                        innerL2(gr.gOm, bracketField(cfg.omega, phi));
      CHECK(std::abs(ip) < 1e-9);
    }
  }

  // SU(2): exact for constant phi (global rotations act exactly).
  {
    auto cfg = randomConfig<SU2>(g, rng, 0.4);
    const auto pert = twoCosinePert<SU2>(g, 0.5, 0);
    const auto gr = gradient(cfg, pert);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 10; ++rep) {
      Field0<SU2> phi(g);
      for (int k = 0; k < 3; ++k) phi.c.row(k).setConstant(nd(rng));
      const double ip = innerL2(gr.gA, covD0(cfg.A, phi)) +
                        innerL2(gr.gOm, bracketField(cfg.omega, phi));
      CHECK(std::abs(ip) < 1e-9);
    }
  }
}

TEST_CASE("energy density and trajectory energy basics") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(60);

  // Constant path at an unperturbed critical point: zero density and energy.
  {
    Configuration<U1> cfg(g);
    const auto path = constantPath(cfg, 5.0, 21);
    const auto te = trajectoryEnergy(path, PerturbationSpec{});
    CHECK(te.energy == 0.0);
    CHECK(te.actionDrop == 0.0);
    const auto e = energyDensity(cfg, Field0<U1>(g), PerturbationSpec{});
    CHECK(e.maxCoeff() == 0.0);
  }

  // Gauge invariance of the density for u(1), including nonzero Psi.
  {
    auto cfg = randomConfig<U1>(g, rng, 0.4);
    const auto psi = randomField0<U1>(g, rng, 2, 0.3);
    const auto pert = twoCosinePert<U1>(g, 0.5, 0);
    const auto e0 = energyDensity(cfg, psi, pert);
    const auto xi = randomField0<U1>(g, rng, 2, 0.5);
    const auto gf = gaugeFromAlgebra(xi);
    const auto cfg2 = gaugeAct(gf, cfg);
    const auto psi2 = gaugeAct0(gf, psi);
    const auto e1 = energyDensity(cfg2, psi2, pert);
    CHECK((e0 - e1).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("gauge alignment recovers a scrambled configuration") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(61);
  auto ref = randomConfig<U1>(g, rng, 0.3);
  const auto xi = randomField0<U1>(g, rng, 1, 0.2);
  const auto scrambled = gaugeAct(gaugeFromAlgebra(xi), ref);
  const double before = configDistance(scrambled, ref);
  const auto gback = gaugeAlign(scrambled, ref, 12);
  const double after = configDistance(gaugeAct(gback, scrambled), ref);
  CHECK(after < 0.05 * before);
}
