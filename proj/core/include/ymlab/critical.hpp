#pragma once

#include <optional>

#include "ymlab/assembly.hpp"

namespace ym {

template <class G>
struct CriticalPoint {
  Configuration<G> cfg;
  double value = 0.0;     // J + h_f
  double residual = 0.0;  // L2 norm of the gradient
  int morseIndex = -1;
  int sliceKernelDim = -1;
  std::vector<double> spectrum;  // head of the slice Hessian spectrum
  bool irreducible = false;             // trivial stabilizer (strict sense)
  bool stabilizerModConstants = false;  // trivial stabilizer modulo constants
  bool nondegenerate = false;
  bool ambiguousClassification = false;
  bool converged = false;
  int newtonIterations = 0;
};

struct NewtonOptions {
  double tol = 1e-10;
  int maxIterations = 80;
  int maxBacktracks = 25;
};

// Rank-filtered orthonormal basis of the gauge-orbit image; drops stabilizer
// directions (constants for u(1), abelian-embedded stabilizers for su(2)).
template <class G>
Eigen::MatrixXd gaugeOrbitBasis(const Configuration<G>& cfg, double relTol = 1e-8) {
  const Eigen::MatrixXd k = assembleGaugeStack(cfg);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(k);
  qr.setThreshold(relTol);
  const int r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ();
  return q.leftCols(r);
}

// Newton iteration on the critical-point system augmented with a gauge
// slice through the initial guess (bordered symmetric system).
template <class G>
CriticalPoint<G> findCritical(const PerturbationSpec& pert, const Configuration<G>& init,
                              const NewtonOptions& opts = {}) {
  const auto& gr = init.grid();
  const Flattener<G> fl(gr);
  const int n = fl.n1() + fl.n0();

  auto packCfg = [&](const Configuration<G>& c) {
    Eigen::VectorXd x(n);
    fl.pack1(c.A, x.segment(0, fl.n1()));
    fl.pack0(c.omega, x.segment(fl.n1(), fl.n0()));
    return x;
  };
  auto unpackCfg = [&](const Eigen::VectorXd& x) {
    Configuration<G> c(gr);
    c.A = fl.unpack1(x.segment(0, fl.n1()));
    c.omega = fl.unpack0(x.segment(fl.n1(), fl.n0()));
    return c;
  };
  auto packGrad = [&](const Configuration<G>& c) {
    const auto g = gradient(c, pert);
    Eigen::VectorXd x(n);
    fl.pack1(g.gA, x.segment(0, fl.n1()));
    fl.pack0(g.gOm, x.segment(fl.n1(), fl.n0()));
    return x;
  };

  const Eigen::VectorXd xref = packCfg(init);
  const Eigen::MatrixXd kref = gaugeOrbitBasis(init);
  const int r = static_cast<int>(kref.cols());

  Configuration<G> cur = init;
  Eigen::VectorXd x = xref;
  CriticalPoint<G> out;
  out.cfg = cur;

  auto merit = [&](const Eigen::VectorXd& xv) {
    const Configuration<G> c = unpackCfg(xv);
    const Eigen::VectorXd g = packGrad(c);
    const Eigen::VectorXd s = kref.transpose() * (xv - xref);
    return 0.5 * (g.squaredNorm() + s.squaredNorm());
  };

  for (int it = 0; it < opts.maxIterations; ++it) {
    cur = unpackCfg(x);
    const Eigen::VectorXd g = packGrad(cur);
    const double res = g.norm();
    out.residual = res;
    out.newtonIterations = it;
    if (res <= opts.tol && (kref.transpose() * (x - xref)).norm() <= 1e2 * opts.tol) {
      out.converged = true;
      break;
    }

    // Hessian of J + h_f on (alpha, v).
    Eigen::MatrixXd hess = assembleDense(n, [&](const Eigen::VectorXd& e) {
      const Field1<G> a = fl.unpack1(e.segment(0, fl.n1()));
      const Field0<G> v = fl.unpack0(e.segment(fl.n1(), fl.n0()));
      const auto h = hessianApply(cur, pert, a, v);
      Eigen::VectorXd o(n);
      fl.pack1(h.r1, o.segment(0, fl.n1()));
      fl.pack0(h.r2, o.segment(fl.n1(), fl.n0()));
      return o;
    });

    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n + r, n + r);
    big.topLeftCorner(n, n) = hess;
    big.topRightCorner(n, r) = kref;
    big.bottomLeftCorner(r, n) = kref.transpose();
    Eigen::VectorXd rhs(n + r);
    rhs.segment(0, n) = -g;
    rhs.segment(n, r) = -(kref.transpose() * (x - xref));

    const Eigen::VectorXd sol = big.partialPivLu().solve(rhs);
    const Eigen::VectorXd step = sol.segment(0, n);
    if (!step.allFinite()) break;

    const double m0 = merit(x);
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opts.maxBacktracks; ++bt, t *= 0.5) {
      if (merit(x + t * step) < m0 * (1.0 - 1e-4 * t) + 1e-300) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    x += t * step;
  }

  // The slice-constrained phase stalls at the gauge-orbit defect of the
  // discretization (exactly zero for u(1), O(h) for su(2)).  A short
  // Levenberg-Marquardt polish on 1/2 |G|^2 releases the slice and drives
  // the residual to the solver tolerance.
  {
    double lm = 1e-8;
    for (int it = 0; it < opts.maxIterations; ++it) {
      cur = unpackCfg(x);
      const Eigen::VectorXd g = packGrad(cur);
      if (g.norm() <= opts.tol) break;
      Eigen::MatrixXd hess = assembleDense(n, [&](const Eigen::VectorXd& e) {
        const Field1<G> a = fl.unpack1(e.segment(0, fl.n1()));
        const Field0<G> v = fl.unpack0(e.segment(fl.n1(), fl.n0()));
        const auto h = hessianApply(cur, pert, a, v);
        Eigen::VectorXd o(n);
        fl.pack1(h.r1, o.segment(0, fl.n1()));
        fl.pack0(h.r2, o.segment(fl.n1(), fl.n0()));
        return o;
      });
      bool accepted = false;
      for (int tries = 0; tries < 12 && !accepted; ++tries) {
        Eigen::MatrixXd m = hess.transpose() * hess;
        m.diagonal().array() += lm;
        const Eigen::VectorXd step = m.ldlt().solve(-hess.transpose() * g);
        if (step.allFinite()) {
          const Eigen::VectorXd xn = x + step;
          const Configuration<G> cn = unpackCfg(xn);
          if (packGrad(cn).squaredNorm() < g.squaredNorm()) {
            x = xn;
            accepted = true;
            lm = std::max(lm * 0.25, 1e-12);
          }
        }
        if (!accepted) lm *= 10;
      }
      if (!accepted) break;
    }
  }

  cur = unpackCfg(x);
  out.cfg = cur;
  out.residual = gradientNorm(cur, pert);
  out.value = evalAction(cur, pert);
  out.converged = out.residual <= opts.tol * 10;
  return out;
}

template <class G>
struct HessianSpectrumResult {
  int morseIndex = 0;
  int kernelDim = 0;
  Eigen::VectorXd eigenvalues;  // full slice spectrum, ascending
  double zeroThreshold = 0.0;
};

// Morse data of the perturbed Yang-Mills Hessian restricted to the Coulomb
// slice ker(coD1(A, .)).
template <class G>
HessianSpectrumResult<G> hessianSpectrum(const Configuration<G>& cfg,
                                         const PerturbationSpec& pert,
                                         double zeroTol = 1e-9) {
  const OperatorAssembly h = assembleH(cfg, pert);
  const Eigen::MatrixXd q = sliceBasis(cfg);
  const Eigen::MatrixXd hs = q.transpose() * h.m * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hs + hs.transpose()));
  HessianSpectrumResult<G> r;
  r.eigenvalues = es.eigenvalues();
  const double scale = std::max(1.0, r.eigenvalues.cwiseAbs().maxCoeff());
  r.zeroThreshold = zeroTol * scale;
  for (int i = 0; i < r.eigenvalues.size(); ++i) {
    if (r.eigenvalues[i] < -r.zeroThreshold) ++r.morseIndex;
    else if (r.eigenvalues[i] <= r.zeroThreshold) ++r.kernelDim;
  }
  return r;
}

struct ClassifyThresholds {
  double singularTol = 1e-8;
  double ambiguousFactor = 10.0;
};

// Irreducibility / nondegeneracy flags via smallest singular values of the
// stacked infinitesimal action and the slice Hessian kernel.
template <class G>
void classifyCritical(CriticalPoint<G>& cp, const PerturbationSpec& pert,
                      const ClassifyThresholds& th = {}) {
  const Eigen::MatrixXd k = assembleGaugeStack(cp.cfg);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(k);
  const Eigen::VectorXd sv = svd.singularValues();
  const double scale = sv.size() ? std::max(1.0, sv[0]) : 1.0;
  const double tol = th.singularTol * scale;
  const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
  cp.irreducible = smin > tol;

  const Flattener<G> fl(cp.cfg.grid());
  const Eigen::MatrixXd qc = constPsiComplement<G>(cp.cfg.grid(), fl.n0(), 0);
  Eigen::BDCSVD<Eigen::MatrixXd> svd2(k * qc);
  const Eigen::VectorXd sv2 = svd2.singularValues();
  const double smin2 = sv2.size() ? sv2[sv2.size() - 1] : 0.0;
  cp.stabilizerModConstants = smin2 > tol;

  const auto hs = hessianSpectrum(cp.cfg, pert);
  cp.morseIndex = hs.morseIndex;
  cp.sliceKernelDim = hs.kernelDim;
  cp.nondegenerate = hs.kernelDim == 0;
  const auto head = spectrumHead(hs.eigenvalues, 8);
  cp.spectrum = head.values;

  cp.ambiguousClassification = false;
  for (double s : {smin, smin2})
    if (s > tol && s < th.ambiguousFactor * tol) cp.ambiguousClassification = true;
  for (double l : cp.spectrum)
    if (std::abs(l) > hs.zeroThreshold && std::abs(l) < th.ambiguousFactor * hs.zeroThreshold)
      cp.ambiguousClassification = true;
}

// ---- eigenvalue reduction (B_{f,0} vs C_{f,lambda}) ----

struct EigenReductionReport {
  int totalPairs = 0;
  int checkedPairs = 0;
  double maxResidual = 0.0;        // C_{f,lambda}(alpha,psi) - lambda (alpha,psi)
  double maxVReconstruction = 0.0;
  int kernelDimB = 0;
  int kernelDimC = 0;
  bool lambdaScanMatched = true;
  double maxScanMismatch = 0.0;
  int scannedRoots = 0;
  bool pass(double tol = 1e-8) const {
    return maxResidual <= tol && maxVReconstruction <= tol && kernelDimB == kernelDimC &&
           lambdaScanMatched;
  }
};

template <class G>
EigenReductionReport checkEigenReduction(const Configuration<G>& cfg,
                                         const PerturbationSpec& pert,
                                         double excludeBand = 1e-3,
                                         int scanRoots = 20,
                                         double kernelTol = 1e-9) {
  EigenReductionReport rep;
  const BState<G> bst(cfg.grid());
  const CState<G> cst(cfg.grid());
  const OperatorAssembly b = assembleB(cfg, pert, true, false);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b.m + b.m.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  const Eigen::MatrixXd evec = es.eigenvectors();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());

  rep.totalPairs = static_cast<int>(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    const double lam = ev[i];
    if (std::abs(lam + 1.0) <= excludeBand) continue;
    const Eigen::VectorXd x = evec.col(i);
    Field1<G> a;
    Field0<G> v, p;
    bst.unpack(x, a, v, p);
    Eigen::VectorXd y(cst.size());
    cst.fl.pack1(a, y.segment(cst.offA(), cst.fl.n1()));
    cst.fl.pack0(p, y.segment(cst.offPsi(), cst.fl.n0()));
    const double ny = y.norm();
    if (ny < 1e-10) continue;  // (alpha,psi) part numerically empty
    ++rep.checkedPairs;
    const Eigen::VectorXd cy = applyC(cst, cfg, pert, lam, y);
    rep.maxResidual = std::max(rep.maxResidual, (cy - lam * y).norm() / ny);
    const Field0<G> vr = reconstructV(cfg, lam, a, p);
    Field0<G> dv = v;
    dv.c -= vr.c;
    const double nv = std::max(1e-12, normL2(v));
    rep.maxVReconstruction = std::max(rep.maxVReconstruction, normL2(dv) / std::max(1.0, nv));
  }

  // Kernel dimensions at lambda = 0 on both sides.
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) <= kernelTol * scale) ++rep.kernelDimB;
  {
    const OperatorAssembly c0 = assembleC(cfg, pert, 0.0);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(c0.m);
    const Eigen::VectorXd sv = svd.singularValues();
    const double cscale = sv.size() ? std::max(1.0, sv[0]) : 1.0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] <= kernelTol * cscale) ++rep.kernelDimC;
  }

  // Independent converse route: scan sigma_min(C_{f,lambda} - lambda) over a
  // window of the lowest B eigenvalues and match the detected roots.  The
  // family is affine in kappa = 1/(lambda+1), so two assemblies suffice.
  std::vector<double> targets;
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i] + 1.0) > excludeBand) targets.push_back(ev[i]);
  std::sort(targets.begin(), targets.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (static_cast<int>(targets.size()) > scanRoots) targets.resize(scanRoots);
  rep.scannedRoots = static_cast<int>(targets.size());

  const Eigen::MatrixXd c0 = assembleC(cfg, pert, 0.0).m;  // kappa = 1
  const Eigen::MatrixXd c1m = assembleC(cfg, pert, 1.0).m; // kappa = 1/2
  const Eigen::MatrixXd kpart = 2.0 * (c0 - c1m);
  const Eigen::MatrixXd base = c0 - kpart;
  auto sigmaMin = [&](double lam) {
    const double kappa = 1.0 / (lam + 1.0);
    Eigen::MatrixXd m = base + kappa * kpart;
    m.diagonal().array() -= lam;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().minCoeff();
  };
  for (double lam : targets) {
    // Golden-section refine around lam with an agnostic bracket.
    double a = lam - 5e-4, bb = lam + 5e-4;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = bb - gr * (bb - a), c2 = a + gr * (bb - a);
    double f1 = sigmaMin(c1), f2 = sigmaMin(c2);
    for (int it = 0; it < 30 && (bb - a) > 1e-10; ++it) {
      if (f1 < f2) {
        bb = c2; c2 = c1; f2 = f1;
        c1 = bb - gr * (bb - a);
        f1 = sigmaMin(c1);
      } else {
        a = c1; c1 = c2; f1 = f2;
        c2 = a + gr * (bb - a);
        f2 = sigmaMin(c2);
      }
    }
    const double root = 0.5 * (a + bb);
    const double resid = sigmaMin(root);
    const double mismatch = std::abs(root - lam);
    rep.maxScanMismatch = std::max(rep.maxScanMismatch, mismatch);
    if (mismatch > 1e-6 * std::max(1.0, std::abs(lam)) || resid > 1e-6 * scale)
      rep.lambdaScanMatched = false;
  }
  return rep;
}

// ---- Hellmann-Feynman check (eigenvalue derivative) ----

struct HellmannFeynmanReport {
  int branches = 0;
  double maxRelError = 0.0;
  bool collision = false;
  bool pass(double tol = 1e-4) const { return !collision && branches > 0 && maxRelError <= tol; }
};

using MatrixFamily = std::function<Eigen::MatrixXd(double)>;

HellmannFeynmanReport hellmannFeynman(const MatrixFamily& family, double s0, int branches,
                                      double hLambda = 1e-4, double hF = 1e-5,
                                      double gapTol = 1e-6);

// ---- spectral flow ----

struct Crossing {
  double s = 0.0;
  int signature = 0;
  int kernelDim = 0;
  bool regular = true;
  double minAbsEig = 0.0;
  double positivityFactor = 1.0;  // filled by the B/C comparison when requested
};

struct SpectralFlowResult {
  int flow = 0;  // sum of crossing signatures = n_neg(start) - n_neg(end)
  std::vector<Crossing> crossings;
  int negStart = 0;
  int negEnd = 0;
  bool consistent = true;  // signature sum matches the negative-count change
  bool regular = true;
};

SpectralFlowResult spectralFlow(const MatrixFamily& family, double sStart, double sEnd,
                                int samples, double crossingTolS = 1e-9,
                                double kernelTol = 1e-7);

// Linear interpolation of a discrete path of configurations, for building
// operator families along trajectories.
template <class G>
Configuration<G> interpolateConfig(const std::vector<Configuration<G>>& cfgs, double s0,
                                   double ds, double s) {
  const int m = static_cast<int>(cfgs.size());
  double t = (s - s0) / ds;
  t = std::min(std::max(t, 0.0), double(m - 1));
  const int k = std::min(static_cast<int>(t), m - 2);
  const double w = t - k;
  Configuration<G> c = cfgs[k];
  c.A.c1 = (1 - w) * cfgs[k].A.c1 + w * cfgs[k + 1].A.c1;
  c.A.c2 = (1 - w) * cfgs[k].A.c2 + w * cfgs[k + 1].A.c2;
  c.omega.c = (1 - w) * cfgs[k].omega.c + w * cfgs[k + 1].omega.c;
  return c;
}

// Family s -> deflated B_f(s) along a path; for u(1) the constant-psi
// stabilizer direction is removed.
template <class G>
MatrixFamily bFamilyAlongPath(const std::vector<Configuration<G>>& cfgs, double s0, double ds,
                              const PerturbationSpec& pert, bool includeDY) {
  const TorusGrid& gr = *cfgs.front().A.grid;
  const BState<G> st(gr);
  Eigen::MatrixXd q;
  if constexpr (G::abelian) {
    q = constPsiComplement<G>(gr, st.size(), st.offPsi());
  }
  return [=, &gr](double s) {
    const Configuration<G> c = interpolateConfig(cfgs, s0, ds, s);
    const OperatorAssembly b = assembleB(c, pert, true, includeDY);
    if constexpr (G::abelian) return Eigen::MatrixXd(q.transpose() * b.m * q);
    else return b.m;
  };
}

template <class G>
MatrixFamily cFamilyAlongPath(const std::vector<Configuration<G>>& cfgs, double s0, double ds,
                              const PerturbationSpec& pert) {
  const TorusGrid& gr = *cfgs.front().A.grid;
  const CState<G> st(gr);
  Eigen::MatrixXd q;
  if constexpr (G::abelian) {
    q = constPsiComplement<G>(gr, st.size(), st.offPsi());
  }
  return [=, &gr](double s) {
    const Configuration<G> c = interpolateConfig(cfgs, s0, ds, s);
    const OperatorAssembly cc = assembleC(c, pert, 0.0);
    if constexpr (G::abelian) return Eigen::MatrixXd(q.transpose() * cc.m * q);
    else return cc.m;
  };
}

// Positivity factor of the crossing-sign comparison:
// 1 + |d_A alpha|^2 + |[omega^psi]|^2 - 2 <*d_A alpha, [omega^psi]>.
template <class G>
double crossingPositivityFactor(const Configuration<G>& cfg, const Field1<G>& a,
                                const Field0<G>& p) {
  const Field2<G> da = covD1(cfg.A, a);
  const Field0<G> wp = bracketField(cfg.omega, p);
  const Field0<G> sda = hodge2(da);
  return 1.0 + innerL2(da, da) + innerL2(wp, wp) - 2.0 * innerL2(sda, wp);
}

}  // namespace ym
