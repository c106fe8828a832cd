#include <doctest.h>

#include <complex>

#include "../common/models.hpp"

using namespace ym;
using namespace ymtest;

namespace {

template <class G>
Configuration<G> randomConfig(const TorusGrid& g, Rng& rng, double amp = 0.3) {
  Configuration<G> c(g);
  c.A = randomField1<G>(g, rng, 2, amp);
  c.omega = randomField0<G>(g, rng, 2, amp);
  return c;
}

PerturbationSpec rectPert(const TorusGrid& g, double eps) {
  PerturbationSpec p;
  p.amplitude = eps;
  p.loops.push_back(rectangleLoop(g, 1, 1, 3, 2, 1.0));
  p.loops.push_back(cycleX(g, 0, -0.6));
  return p;
}

}  // namespace

TEST_CASE("assembleB: symmetry and block structure") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(71);

  // Unperturbed at random cfg, both groups: exactly symmetric.
  {
    auto cfg = randomConfig<U1>(g, rng);
    CHECK(assembleB(cfg, PerturbationSpec{}).symmetryDefect() < 1e-12);
  }
  {
    auto cfg = randomConfig<SU2>(g, rng);
    CHECK(assembleB(cfg, PerturbationSpec{}).symmetryDefect() < 1e-12);
  }
  // A-only perturbation keeps B_{f,0} and B_f symmetric.
  {
    auto cfg = randomConfig<U1>(g, rng);
    const auto pert = rectPert(g, 0.4);
    CHECK(assembleB(cfg, pert, true, false).symmetryDefect() < 1e-12);
    CHECK(assembleB(cfg, pert, true, true).symmetryDefect() < 1e-12);
  }
  // Conformal factor: still exactly symmetric in scaled coordinates.
  {
    auto rng2 = makeRng(72);
    Eigen::ArrayXd u =
        detail::randomSmoothArray(TorusGrid(8, 8, 1, 1), 1, rng2, 1, 0.15).row(0);
    TorusGrid gc(8, 8, 2 * M_PI, 2 * M_PI, u);
    Configuration<SU2> cfg(gc);
    cfg.A = randomField1<SU2>(gc, rng2, 2, 0.3);
    cfg.omega = randomField0<SU2>(gc, rng2, 2, 0.3);
    CHECK(assembleB(cfg, PerturbationSpec{}).symmetryDefect() < 1e-12);
  }
}

TEST_CASE("assembleB at the zero configuration matches the fourier oracle") {
  TorusGrid g(8, 8, 2 * M_PI, 1.0 * M_PI);
  Configuration<U1> cfg(g);
  const auto b = assembleB(cfg, PerturbationSpec{});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.m, Eigen::EigenvaluesOnly);

  // Per Fourier mode the operator is the hermitian 4x4 symbol matrix on
  // (a1, a2, v, psi) built from forward/backward difference multipliers.
  std::vector<double> oracle;
  using C = std::complex<double>;
  for (int k = 0; k < g.nx; ++k)
    for (int l = 0; l < g.ny; ++l) {
      const C dx = (std::polar(1.0, 2 * M_PI * k / g.nx) - 1.0) / g.hx;
      const C dy = (std::polar(1.0, 2 * M_PI * l / g.ny) - 1.0) / g.hy;
      const C dxb = (1.0 - std::polar(1.0, -2 * M_PI * k / g.nx)) / g.hx;
      const C dyb = (1.0 - std::polar(1.0, -2 * M_PI * l / g.ny)) / g.hy;
      Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
      m(0, 2) = dyb;   // row a1: + Dyb v
      m(0, 3) = -dx;   // row a1: - Dx psi
      m(1, 2) = -dxb;  // row a2: - Dxb v
      m(1, 3) = -dy;   // row a2: - Dy psi
      m(2, 0) = -dy;   // row v: -Dy a1
      m(2, 1) = dx;    // row v: +Dx a2
      m(2, 2) = -1.0;
      m(3, 0) = dxb;   // row psi: +Dxb a1
      m(3, 1) = dyb;   // row psi: +Dyb a2
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> sym(m, Eigen::EigenvaluesOnly);
      for (int i = 0; i < 4; ++i) oracle.push_back(sym.eigenvalues()[i]);
    }
  std::sort(oracle.begin(), oracle.end());
  REQUIRE(static_cast<int>(oracle.size()) == es.eigenvalues().size());
  double err = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    err = std::max(err, std::abs(es.eigenvalues()[i] - oracle[i]));
  CHECK(err < 1e-9);
}

TEST_CASE("hessianSpectrum: flat torus and the double-cosine model") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);

  // Unperturbed flat connection: index 0, two harmonic zero modes on slice.
  {
    Configuration<U1> cfg(g);
    const auto hs = hessianSpectrum(cfg, PerturbationSpec{});
    CHECK(hs.morseIndex == 0);
    CHECK(hs.kernelDim == 2);
  }

  // Perturbed model: lattice Morse indices match the reduced oracle.
  const double eps = 0.3;
  const auto pert = cosCosPert(g, eps);
  const ReducedCosModel reduced{eps};
  for (const auto& rc : reduced.criticalPoints()) {
    const auto cfg = flatConfig(g, rc.t1, rc.t2);
    CHECK(gradientNorm(cfg, pert) < 1e-12);  // flat points stay exactly critical
    const auto hs = hessianSpectrum(cfg, pert);
    CHECK(hs.morseIndex == rc.index);
    CHECK(hs.kernelDim == 0);
  }
}

TEST_CASE("assembleC: structure, symmetry, and the critical-point corner") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(73);

  CHECK_THROWS(assembleC(Configuration<U1>(g), PerturbationSpec{}, -1.0));

  // Symmetry at a generic configuration with an A-only perturbation.
  {
    auto cfg = randomConfig<U1>(g, rng);
    const auto pert = rectPert(g, 0.4);
    CHECK(assembleC(cfg, pert, 0.0).symmetryDefect() < 1e-12);
    CHECK(assembleC(cfg, pert, 0.7).symmetryDefect() < 1e-12);
  }

  // Abelian with omega = 0: off-diagonal blocks reduce to (-covD0, -coD1).
  {
    Configuration<U1> cfg(g);
    auto rng2 = makeRng(74);
    cfg.A = randomField1<U1>(g, rng2, 2, 0.4);
    const auto c = assembleC(cfg, PerturbationSpec{}, 0.3);
    const CState<U1> st(g);
    const Flattener<U1>& fl = st.fl;
    Eigen::MatrixXd offTL(fl.n1(), fl.n0());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(fl.n0());
    Eigen::VectorXd col(fl.n1());
    for (int j = 0; j < fl.n0(); ++j) {
      e[j] = 1.0;
      Field1<U1> d = covD0(cfg.A, fl.unpack0(e));
      d.c1 = -d.c1;
      d.c2 = -d.c2;
      fl.pack1(d, col);
      offTL.col(j) = col;
      e[j] = 0.0;
    }
    CHECK((c.m.topRightCorner(fl.n1(), fl.n0()) - offTL).cwiseAbs().maxCoeff() < 1e-12);
  }

  // At a critical point of the double-cosine model, the upper-left block of
  // C_{f,0} equals the perturbed Yang-Mills Hessian H.
  {
    const auto pert = cosCosPert(g, 0.3);
    const auto cfg = flatConfig(g, M_PI, 0.0);
    const auto c = assembleC(cfg, pert, 0.0);
    const auto h = assembleH(cfg, pert);
    const int n1 = Flattener<U1>(g).n1();
    CHECK((c.m.topLeftCorner(n1, n1) - h.m).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(h.m.isApprox(h.m.transpose(), 1e-12));
  }
}

TEST_CASE("eigenvalue reduction between B_f0 and C_f_lambda") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(75);

  // Generic abelian configuration, A-only perturbation.
  {
    auto cfg = randomConfig<U1>(g, rng, 0.25);
    const auto pert = rectPert(g, 0.4);
    const auto rep = checkEigenReduction(cfg, pert, 1e-3, 12);
    CHECK(rep.checkedPairs > 200);
    CHECK(rep.maxResidual < 1e-8);
    CHECK(rep.maxVReconstruction < 1e-8);
    CHECK(rep.kernelDimB == rep.kernelDimC);
    CHECK(rep.kernelDimB >= 1);  // u(1) constant stabilizer mode
    CHECK(rep.lambdaScanMatched);
  }

  // Unperturbed zero configuration: kernel carries the harmonic modes.
  {
    Configuration<U1> cfg(g);
    const auto rep = checkEigenReduction(cfg, PerturbationSpec{}, 1e-3, 6);
    CHECK(rep.maxResidual < 1e-8);
    CHECK(rep.kernelDimB == rep.kernelDimC);
    CHECK(rep.kernelDimB == 3);  // two harmonic 1-forms + constant psi
  }

  // su(2) random small configuration (20 lowest pairs via the scan budget).
  {
    TorusGrid gs(6, 6, 2 * M_PI, 2 * M_PI);
    // grids >= 4 per spec; 6x6 keeps the dense eig fast
    Configuration<SU2> cfg(gs);
    auto rng2 = makeRng(76);
    cfg.A = randomField1<SU2>(gs, rng2, 2, 0.2);
    cfg.omega = randomField0<SU2>(gs, rng2, 2, 0.2);
    PerturbationSpec pert;
    pert.amplitude = 0.3;
    pert.loops.push_back(rectangleLoop(gs, 0, 0, 2, 2, 1.0));
    const auto rep = checkEigenReduction(cfg, pert, 1e-3, 20);
    CHECK(rep.maxResidual < 1e-8);
    CHECK(rep.maxVReconstruction < 1e-8);
    CHECK(rep.kernelDimB == rep.kernelDimC);
    CHECK(rep.lambdaScanMatched);
  }

  // t-winding perturbation: verify the v-reconstruction identity directly on
  // random vectors (B_{f,0} is not symmetric there).
  {
    auto cfg = randomConfig<U1>(g, rng, 0.25);
    PerturbationSpec pert;
    pert.amplitude = 0.4;
    pert.loops.push_back(cycleX(g, 0, 1.0, Profile::ReTrace, 1));
    const BState<U1> st(g);
    const CState<U1> cst(g);
    auto rng3 = makeRng(77);
    for (int rep = 0; rep < 5; ++rep) {
      const double lam = 0.37 + 0.1 * rep;
      Field1<U1> a = randomField1<U1>(g, rng3);
      Field0<U1> p = randomField0<U1>(g, rng3);
      const Field0<U1> v = reconstructV(cfg, lam, a, p);
      // Row 2 of (B_{f,0} - lam) vanishes by construction of v.
      const Eigen::VectorXd x = st.pack(a, v, p);
      const Eigen::VectorXd bx = applyB(st, cfg, pert, true, false, x);
      Field1<U1> ba;
      Field0<U1> bv, bp;
      st.unpack(bx - lam * x, ba, bv, bp);
      CHECK(normL2(bv) < 1e-11);
    }
  }
}

TEST_CASE("findCritical on the double-cosine model") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  const double eps = 0.3;
  const auto pert = cosCosPert(g, eps);

  // Unperturbed zero configuration is an exact fixed point.
  {
    Configuration<U1> cfg(g);
    const auto cp = findCritical(PerturbationSpec{}, cfg);
    CHECK(cp.converged);
    CHECK(cp.residual < 1e-12);
    CHECK(cp.newtonIterations == 0);
  }

  // Perturbed: noisy start near the minimum recovers the exact flat point.
  {
    auto rng = makeRng(78);
    auto init = flatConfig(g, 0.0, 0.0);
    const auto noiseA = randomField1<U1>(g, rng, 2, 0.02);
    const auto noiseW = randomField0<U1>(g, rng, 2, 0.02);
    init.A.c1 += noiseA.c1;
    init.A.c2 += noiseA.c2;
    init.omega.c += noiseW.c;
    const auto cp = findCritical(pert, init);
    CHECK(cp.converged);
    CHECK(cp.residual < 1e-10);
    // Gauge-invariant recovery checks: flat, omega = 0, trivial mean holonomy.
    CHECK(normL2(curvature(cp.cfg.A)) < 1e-9);
    CHECK(normL2(cp.cfg.omega) < 1e-9);
    CHECK(std::abs(cp.cfg.A.c1.mean()) < 1e-9);
    CHECK(std::abs(cp.cfg.A.c2.mean()) < 1e-9);
    CHECK(cp.value == doctest::Approx(-2 * eps).epsilon(1e-9));
  }

  // Saddle and maximum also recovered with correct indices and values.
  {
    const ReducedCosModel reduced{eps};
    for (const auto& rc : reduced.criticalPoints()) {
      auto rng = makeRng(79 + rc.index);
      auto init = flatConfig(g, rc.t1, rc.t2);
      const auto noiseA = randomField1<U1>(g, rng, 2, 0.01);
      init.A.c1 += noiseA.c1;
      init.A.c2 += noiseA.c2;
      auto cp = findCritical(pert, init);
      CHECK(cp.converged);
      classifyCritical(cp, pert);
      CHECK(cp.morseIndex == rc.index);
      CHECK(cp.value == doctest::Approx(rc.value).epsilon(1e-8));
      CHECK(cp.nondegenerate);
      CHECK_FALSE(cp.irreducible);           // u(1) constant stabilizer
      CHECK(cp.stabilizerModConstants);      // trivial modulo constants
    }
  }

  // su(2): continuation from the abelian embedding at small amplitude.
  {
    PerturbationSpec pert2;
    pert2.amplitude = 0.05;
    pert2.loops.push_back(cycleX(g, 0, -1.0));
    pert2.loops.push_back(cycleY(g, 0, -1.0));
    auto rng = makeRng(80);
    auto initU1 = flatConfig(g, 0.0, 0.0);
    auto init = embedSU2(initU1);
    const auto noise = randomField1<SU2>(g, rng, 1, 0.01);
    init.A.c1 += noise.c1;
    init.A.c2 += noise.c2;
    const auto cp = findCritical(pert2, init, NewtonOptions{1e-10, 120, 30});
    CHECK(cp.converged);
    CHECK(cp.residual < 1e-9);
  }
}

TEST_CASE("classify: su(2) generic vs abelian-embedded") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(81);

  // Generic su(2) configuration: trivial stabilizer.
  {
    CriticalPoint<SU2> cp;
    cp.cfg = randomConfig<SU2>(g, rng, 0.3);
    classifyCritical(cp, PerturbationSpec{});
    CHECK(cp.irreducible);
  }

  // Abelian-embedded configuration: reducible (residual U(1) stabilizer).
  {
    CriticalPoint<SU2> cp;
    cp.cfg = embedSU2(flatConfig(g, 1.0, 0.5));
    classifyCritical(cp, PerturbationSpec{});
    CHECK_FALSE(cp.irreducible);
  }
}

TEST_CASE("hellmann-feynman: diagonal family and operator families") {
  // Exact diagonal family F(s) = diag(s, 1): lambda_dot = 1.
  {
    const MatrixFamily fam = [](double s) {
      Eigen::MatrixXd m(2, 2);
      m << s, 0, 0, 1;
      return m;
    };
    const auto rep = hellmannFeynman(fam, 0.3, 1);
    CHECK(rep.branches == 1);
    CHECK(rep.maxRelError < 1e-9);
  }

  // Abelian B_{f,0} family along a linear segment of configurations.
  {
    TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
    const auto pert = cosCosPert(g, 0.3);
    std::vector<Configuration<U1>> cfgs = {flatConfig(g, 0.2, 0.1), flatConfig(g, 2.8, 0.4)};
    const auto fam = bFamilyAlongPath(cfgs, 0.0, 1.0, pert, false);
    const auto rep = hellmannFeynman(fam, 0.45, 5);
    CHECK(rep.branches == 5);
    CHECK_FALSE(rep.collision);
    CHECK(rep.maxRelError < 1e-4);
  }

  // su(2) segment, 5 tracked branches.
  {
    TorusGrid g(6, 6, 2 * M_PI, 2 * M_PI);
    auto rng = makeRng(82);
    Configuration<SU2> c0(g), c1(g);
    c0.A = randomField1<SU2>(g, rng, 1, 0.2);
    c0.omega = randomField0<SU2>(g, rng, 1, 0.2);
    c1.A = randomField1<SU2>(g, rng, 1, 0.2);
    c1.omega = randomField0<SU2>(g, rng, 1, 0.2);
    std::vector<Configuration<SU2>> cfgs = {c0, c1};
    PerturbationSpec pert;
    pert.amplitude = 0.2;
    pert.loops.push_back(rectangleLoop(g, 0, 0, 2, 2, 1.0));
    const auto fam = bFamilyAlongPath(cfgs, 0.0, 1.0, pert, false);
    const auto rep = hellmannFeynman(fam, 0.5, 5);
    CHECK(rep.branches == 5);
    CHECK(rep.maxRelError < 1e-4);
  }
}

TEST_CASE("spectral flow: analytic families") {
  // Constant family: no crossings.
  {
    const MatrixFamily fam = [](double) {
      Eigen::MatrixXd m(3, 3);
      m << 1, 0, 0, 0, -2, 0, 0, 0, 0.5;
      return m;
    };
    const auto sf = spectralFlow(fam, 0.0, 1.0, 9);
    CHECK(sf.flow == 0);
    CHECK(sf.crossings.empty());
    CHECK(sf.consistent);
  }

  // One simple crossing of slope +1: signature +1, flow +1 (the index
  // contribution ind H(start) - ind H(end) = 1 - 0).
  {
    const MatrixFamily fam = [](double s) {
      Eigen::MatrixXd m(2, 2);
      m << s - 0.3, 0.05, 0.05, 1.0;
      return m;
    };
    const auto sf = spectralFlow(fam, -1.0, 1.0, 17);
    REQUIRE(sf.crossings.size() == 1);
    CHECK(sf.crossings[0].signature == 1);
    CHECK(sf.flow == 1);
    CHECK(sf.consistent);
    CHECK(sf.negStart - sf.negEnd == 1);
    // det(M(s)) = (s - 0.3) - 0.05^2 vanishes at s = 0.3025.
    CHECK(std::abs(sf.crossings[0].s - 0.3025) < 1e-6);
  }

  // Two crossings of opposite slope: net flow zero, both recorded.
  {
    const MatrixFamily fam = [](double s) {
      Eigen::MatrixXd m(2, 2);
      m << s - 0.25, 0, 0, 0.75 - s;
      return m;
    };
    const auto sf = spectralFlow(fam, 0.0, 1.0, 21);
    CHECK(sf.crossings.size() == 2);
    CHECK(sf.flow == 0);
    CHECK(sf.consistent);
  }
}

TEST_CASE("spectral flow along a configuration segment: B vs C agree") {
  TorusGrid g(8, 8, 2 * M_PI, 2 * M_PI);
  const double eps = 0.3;
  const auto pert = cosCosPert(g, eps);
  // Straight segment in configuration space from the perturbed minimum to
  // the saddle: ends are nondegenerate, so the flow is well-defined.
  std::vector<Configuration<U1>> cfgs = {flatConfig(g, 0.0, 0.0), flatConfig(g, M_PI, 0.0)};
  const auto famB = bFamilyAlongPath(cfgs, 0.0, 1.0, pert, false);
  const auto famC = cFamilyAlongPath(cfgs, 0.0, 1.0, pert);
  const auto sfB = spectralFlow(famB, 0.0, 1.0, 33);
  const auto sfC = spectralFlow(famC, 0.0, 1.0, 33);
  CHECK(sfB.consistent);
  CHECK(sfC.consistent);
  CHECK(sfB.flow == sfC.flow);
  CHECK(sfB.crossings.size() == sfC.crossings.size());
  // Ends: operator index difference matches minus the flow along the segment
  // (from minimum to saddle the index rises by one).
  const auto hs0 = hessianSpectrum(cfgs[0], pert);
  const auto hs1 = hessianSpectrum(cfgs[1], pert);
  CHECK(hs0.morseIndex - hs1.morseIndex == sfB.flow);
  // Positivity factor at each crossing.
  for (const auto& cr : sfB.crossings) {
    const auto cfg = interpolateConfig(cfgs, 0.0, 1.0, cr.s);
    // Extract the kernel vector of B at the crossing.
    const BState<U1> st(g);
    const Eigen::MatrixXd q = constPsiComplement<U1>(g, st.size(), st.offPsi());
    const Eigen::MatrixXd bm = q.transpose() * assembleB(cfg, pert, true, false).m * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bm);
    int imin = 0;
    es.eigenvalues().cwiseAbs().minCoeff(&imin);
    const Eigen::VectorXd x = q * es.eigenvectors().col(imin);
    Field1<U1> a;
    Field0<U1> v, p;
    st.unpack(x, a, v, p);
    const double factor = crossingPositivityFactor(cfg, a, p);
    CHECK(factor >= 1.0 - 1e-9);
  }
}
