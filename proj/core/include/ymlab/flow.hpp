#pragma once

#include "ymlab/critical.hpp"

namespace ym {

// Block-tridiagonal space-time operator: per-slice dense diagonal blocks
// plus scalar-multiple-of-identity couplings to the neighbor slices.
// Dirichlet slices have identity diagonal and no coupling.
struct BlockTridiag {
  int slices = 0;
  int n = 0;
  std::vector<Eigen::MatrixXd> diag;
  std::vector<double> sub, super;  // coupling coefficients per row block

  int size() const { return slices * n; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd applyTranspose(const Eigen::VectorXd& x) const;
  BlockTridiag transpose() const;
};

// Pivoted banded LU of a block-tridiagonal operator (scalar bandwidth n).
// Block elimination without pivoting blows up on these first-order systems
// (exponential dichotomy); LAPACK's partial pivoting keeps it stable.
struct BandedFactor {
  int n = 0, kl = 0, ku = 0, ldab = 0;
  std::vector<double> ab;
  std::vector<int> ipiv;
  bool ok = false;

  void factorize(const BlockTridiag& op);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, bool transposed = false) const;
};

// Smallest singular values and vectors via subspace iteration on the
// factored normal operator.
struct SmallSigmaResult {
  std::vector<double> sigmas;  // ascending
  Eigen::MatrixXd vectors;     // corresponding right singular vectors
};
SmallSigmaResult smallestSingular(const BlockTridiag& op, int count, int iterations = 40,
                                  std::uint64_t seed = 12345);

struct IndexResult {
  int kernelDim = 0;
  int cokernelDim = 0;
  int index = 0;
  bool ambiguous = false;
  std::vector<double> kernelSigmas, cokernelSigmas;
  Eigen::MatrixXd kernelVectors;
  double threshold = 0.0;
};

// dim ker - dim coker by thresholded smallest singular values of the
// Dirichlet problem and of the adjoint Dirichlet problem.
IndexResult numericIndex(const BlockTridiag& dirichletOp, const BlockTridiag& adjointOp,
                         double relThreshold = 1e-8, int probe = 6);

// ---- fast per-slice dense assembly (colored probing) ----

// Dense matrix of B_f(cfg) (+ optional nabla_s bracket with psi) built from
// locality-colored probes of the exact operator applier plus
// support-restricted perturbation columns.
template <class G>
Eigen::MatrixXd assembleBBlock(const Configuration<G>& cfg, const PerturbationSpec& pert,
                               bool includeDX, bool includeDY,
                               const Field0<G>* psiBracket = nullptr);

// ---- the space-time operator along a temporal path ----

// D = nabla_s + B_f(s) with centered interior differences and Dirichlet end
// slices; `reversed` builds the adjoint problem -d/ds + B^T with its own
// Dirichlet rows.
template <class G>
BlockTridiag assembleD(const TemporalPath<G>& path, const PerturbationSpec& pert,
                       bool adjointProblem = false);

// ---- trajectory boundary value problem ----

struct TrajectoryOptions {
  double S = 16.0;
  int M = 64;  // forced even (parity pins the centered-difference parasite)
  double tol = 1e-9;
  int maxNewton = 40;
  int maxBacktracks = 14;
  int heatSmoothSteps = 6;
  double initNoiseAmp = 0.0;
  std::uint64_t seed = 0;
  bool alignEndpoints = true;
  // Refactor the space-time Jacobian every this many iterations (chord
  // Newton between refreshes; factorization dominates the cost on finer
  // grids).
  int jacobianEvery = 1;
};

template <class G>
struct TrajectoryResult {
  TemporalPath<G> path;
  bool converged = false;
  double residual = 0.0;
  int newtonIterations = 0;
  std::vector<double> actionProfile;
  std::vector<double> energyProfile;  // integral of the energy density per slice
  bool brokenSuspected = false;
};

template <class G>
TrajectoryResult<G> solveTrajectory(const CriticalPoint<G>& from, const CriticalPoint<G>& to,
                                    const PerturbationSpec& pert, const TrajectoryOptions& opts,
                                    const TemporalPath<G>* init = nullptr);

// ---- diagnostics ----

struct DecayFitTail {
  double delta = 0.0;  // fitted decay rate
  double r2 = 0.0;
  double minConvexityGap = 0.0;  // min over the tail of f'' - (0.9 delta)^2 f
  bool degenerate = false;
};

struct DecayFitResult {
  DecayFitTail minus, plus;  // tails toward s -> -S and s -> +S
};

template <class G>
DecayFitResult decayFit(const TemporalPath<G>& path);

// sigma_min of the stacked linearized operator (= |B_f| spectrum bottom,
// u(1) constants quotiented); c = 1/sigma_min^2.
template <class G>
struct CoercivityResult {
  double sigmaMin = 0.0;
  double c = 0.0;
  bool degenerate = false;
  bool preconditionHolds = true;  // L-inf gradient smallness
};

template <class G>
CoercivityResult<G> coercivityEstimate(const Configuration<G>& cfg, const PerturbationSpec& pert,
                                       double gradInfBound = 1e-2, double degenerateTol = 1e-10);

// Residual of the second-order omega equation along a discrete path
// (abelian perturbed form; unperturbed when pert is empty).
template <class G>
double omegaEquationResidual(const TemporalPath<G>& path, const PerturbationSpec& pert);

// ---- implementation of templates ----

template <class G>
Eigen::MatrixXd assembleBBlock(const Configuration<G>& cfg, const PerturbationSpec& pert,
                               bool includeDX, bool includeDY, const Field0<G>* psiBracket) {
  const TorusGrid& gr = cfg.grid();
  const BState<G> st(gr);
  const int n = st.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);

  const int sx = (gr.nx % 3 == 0) ? 3 : (gr.nx % 4 == 0 ? 4 : gr.nx);
  const int sy = (gr.ny % 3 == 0) ? 3 : (gr.ny % 4 == 0 ? 4 : gr.ny);
  const PerturbationSpec nopert;

  // Colored probes of the local (unperturbed) operator.
  const int blockOff[4] = {0, st.fl.dV(), st.offV(), st.offPsi()};
  auto dofIndex = [&](int block, int z, int k) { return blockOff[block] + z * G::dim + k; };
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int block = 0; block < 4; ++block)
    for (int k = 0; k < G::dim; ++k)
      for (int cx = 0; cx < sx; ++cx)
        for (int cy = 0; cy < sy; ++cy) {
          e.setZero();
          std::vector<int> probeSites;
          for (int z = 0; z < gr.sites(); ++z)
            if (gr.siteX(z) % sx == cx && gr.siteY(z) % sy == cy) {
              e[dofIndex(block, z, k)] = 1.0;
              probeSites.push_back(z);
            }
          const Eigen::VectorXd y = applyB(st, cfg, nopert, false, false, e);
          for (int z : probeSites) {
            const int col = dofIndex(block, z, k);
            // Rows live within Chebyshev distance one of the probe site.
            const int x0 = gr.siteX(z), y0 = gr.siteY(z);
            for (int dx = -1; dx <= 1; ++dx)
              for (int dy = -1; dy <= 1; ++dy) {
                const int zz = gr.idx((x0 + dx + gr.nx) % gr.nx, (y0 + dy + gr.ny) % gr.ny);
                for (int b2 = 0; b2 < 4; ++b2)
                  for (int k2 = 0; k2 < G::dim; ++k2) {
                    const int row = dofIndex(b2, zz, k2);
                    if (y[row] != 0.0) m(row, col) = y[row];
                  }
              }
          }
        }

  // Perturbation Hessian columns restricted to the loop support.
  if (!pert.empty() && (includeDX || includeDY)) {
    const PertSupport sup = perturbationSupport(gr, pert);
    std::vector<int> cols;
    for (const auto& [comp, z] : sup.aDofs)
      for (int k = 0; k < G::dim; ++k) cols.push_back(dofIndex(comp, z, k));
    for (int z : sup.omegaSites)
      for (int k = 0; k < G::dim; ++k) cols.push_back(dofIndex(2, z, k));
    Eigen::VectorXd out(n);
    for (int col : cols) {
      e.setZero();
      e[col] = 1.0;
      Field1<G> a;
      Field0<G> v, p;
      st.unpack(e, a, v, p);
      const auto dp = applyPerturbationHessian(gr, cfg.A, cfg.omega, pert, a, v);
      Field1<G> r1(gr);
      Field0<G> r2(gr), r3(gr);
      if (includeDX) {
        r1.c1 = -dp.dX.c1;
        r1.c2 = -dp.dX.c2;
      }
      if (includeDY) r2.c = dp.dY.c;
      out.setZero();
      st.fl.pack1(r1, out.segment(st.offA(), st.fl.n1()));
      st.fl.pack0(r2, out.segment(st.offV(), st.fl.n0()));
      for (int i = 0; i < n; ++i)
        if (out[i] != 0.0) m(i, col) += out[i];
    }
  }

  // nabla_s bracket [Psi ^ .] on all four component blocks.
  if (psiBracket != nullptr && !G::abelian) {
    for (int z = 0; z < gr.sites(); ++z) {
      Eigen::Matrix3d ad;
      const double p1 = psiBracket->c(0, z), p2 = psiBracket->c(1, z), p3 = psiBracket->c(2, z);
      ad << 0, -2 * p3, 2 * p2, 2 * p3, 0, -2 * p1, -2 * p2, 2 * p1, 0;
      for (int block = 0; block < 4; ++block)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            m(dofIndex(block, z, i), dofIndex(block, z, j)) += ad(i, j);
    }
  }
  return m;
}

template <class G>
BlockTridiag assembleD(const TemporalPath<G>& path, const PerturbationSpec& pert,
                       bool adjointProblem) {
  const BState<G> st(*path.grid);
  BlockTridiag op;
  op.slices = path.slices();
  op.n = st.size();
  op.diag.resize(op.slices);
  op.sub.assign(op.slices, 0.0);
  op.super.assign(op.slices, 0.0);
  const double c = 1.0 / (2.0 * path.ds);
  for (int k = 0; k < op.slices; ++k) {
    if (k == 0 || k == op.slices - 1) {
      op.diag[k] = Eigen::MatrixXd::Identity(op.n, op.n);
      continue;
    }
    Eigen::MatrixXd b = assembleBBlock(path.cfg[k], pert, true, true, &path.psi[k]);
    if (adjointProblem) {
      op.diag[k] = b.transpose();
      op.sub[k] = c;
      op.super[k] = -c;
    } else {
      op.diag[k] = std::move(b);
      op.sub[k] = -c;
      op.super[k] = c;
    }
  }
  return op;
}

namespace detail {

// Interior-slice residual of the discrete flow system (rows 1-2; the
// gauge-fixing row constrains updates only and has zero residual).
template <class G>
void flowResidualSlice(const TemporalPath<G>& path, const PerturbationSpec& pert, int k,
                       const BState<G>& st, Eigen::Ref<Eigen::VectorXd> out) {
  const auto& cfg = path.cfg[k];
  const double c = 1.0 / (2.0 * path.ds);
  const auto g = gradient(cfg, pert);
  Field1<G> r1 = covD0(cfg.A, path.psi[k]);
  r1.c1 = c * (path.cfg[k + 1].A.c1 - path.cfg[k - 1].A.c1) - r1.c1 + g.gA.c1;
  r1.c2 = c * (path.cfg[k + 1].A.c2 - path.cfg[k - 1].A.c2) - r1.c2 + g.gA.c2;
  Field0<G> r2 = bracketField(path.psi[k], cfg.omega);
  r2.c = c * (path.cfg[k + 1].omega.c - path.cfg[k - 1].omega.c) + r2.c + g.gOm.c;
  out.setZero();
  st.fl.pack1(r1, out.segment(st.offA(), st.fl.n1()));
  st.fl.pack0(r2, out.segment(st.offV(), st.fl.n0()));
}

}  // namespace detail

template <class G>
TrajectoryResult<G> solveTrajectory(const CriticalPoint<G>& from, const CriticalPoint<G>& to,
                                    const PerturbationSpec& pert, const TrajectoryOptions& opts,
                                    const TemporalPath<G>* init) {
  const TorusGrid& gr = from.cfg.grid();
  const BState<G> st(gr);
  const int n = st.size();
  int M = opts.M;
  if (M % 2 != 0) ++M;  // even slice count pins the centered-difference parasite
  const double ds = 2 * opts.S / (M - 1);

  Configuration<G> endMinus = from.cfg;
  Configuration<G> endPlus = to.cfg;
  if (opts.alignEndpoints && configDistance(endPlus, endMinus) > 1e-12) {
    const auto gf = gaugeAlign(endPlus, endMinus);
    endPlus = gaugeAct(gf, endPlus);
  }

  TrajectoryResult<G> out;
  TemporalPath<G>& path = out.path;
  if (init != nullptr && init->slices() == M) {
    path = *init;
    path.cfg.front() = endMinus;
    path.cfg.back() = endPlus;
  } else {
    path.grid = &gr;
    path.s0 = -opts.S;
    path.ds = ds;
    path.cfg.assign(M, Configuration<G>(gr));
    path.psi.assign(M, Field0<G>(gr));
    auto rng = makeRng(opts.seed, 17);
    Field1<G> noiseA = randomField1<G>(gr, rng, 2, opts.initNoiseAmp);
    Field0<G> noiseW = randomField0<G>(gr, rng, 2, opts.initNoiseAmp);
    const double tau = opts.S / 6.0;
    for (int k = 0; k < M; ++k) {
      const double s = -opts.S + k * ds;
      const double t = 0.5 * (1.0 + std::tanh(s / tau));
      const double bump = std::sin(M_PI * k / double(M - 1));
      path.cfg[k].A.c1 = (1 - t) * endMinus.A.c1 + t * endPlus.A.c1 + bump * noiseA.c1;
      path.cfg[k].A.c2 = (1 - t) * endMinus.A.c2 + t * endPlus.A.c2 + bump * noiseA.c2;
      path.cfg[k].omega.c = (1 - t) * endMinus.omega.c + t * endPlus.omega.c + bump * noiseW.c;
    }
    for (int sm = 0; sm < opts.heatSmoothSteps; ++sm)
      for (int k = 1; k + 1 < M; ++k) {
        path.cfg[k].A.c1 += 0.25 * (path.cfg[k + 1].A.c1 - 2 * path.cfg[k].A.c1 + path.cfg[k - 1].A.c1);
        path.cfg[k].A.c2 += 0.25 * (path.cfg[k + 1].A.c2 - 2 * path.cfg[k].A.c2 + path.cfg[k - 1].A.c2);
        path.cfg[k].omega.c += 0.25 * (path.cfg[k + 1].omega.c - 2 * path.cfg[k].omega.c + path.cfg[k - 1].omega.c);
      }
  }
  path.ds = ds;
  path.s0 = -opts.S;

  auto residualVec = [&]() {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(M * n);
    for (int k = 1; k + 1 < M; ++k)
      detail::flowResidualSlice(path, pert, k, st, r.segment(k * n, n));
    return r;
  };
  auto resNorm = [&](const Eigen::VectorXd& r) { return r.norm() * std::sqrt(ds); };

  Eigen::VectorXd r = residualVec();
  double rn = resNorm(r);
  const double tolAbs = opts.tol * (1.0 + std::abs(from.value) + std::abs(to.value));
  for (int it = 0; it < opts.maxNewton; ++it) {
    out.newtonIterations = it;
    if (rn <= tolAbs) break;
    BlockTridiag d = assembleD(path, pert, false);
    const auto fac = d.factor();
    const Eigen::VectorXd step = fac.solve(-r);
    if (!step.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    TemporalPath<G> trial = path;
    for (int bt = 0; bt < opts.maxBacktracks; ++bt, t *= 0.5) {
      for (int k = 1; k + 1 < M; ++k) {
        Field1<G> a;
        Field0<G> v, p;
        st.unpack(step.segment(k * n, n), a, v, p);
        trial.cfg[k].A.c1 = path.cfg[k].A.c1 + t * a.c1;
        trial.cfg[k].A.c2 = path.cfg[k].A.c2 + t * a.c2;
        trial.cfg[k].omega.c = path.cfg[k].omega.c + t * v.c;
        trial.psi[k].c = path.psi[k].c + t * p.c;
      }
      std::swap(path.cfg, trial.cfg);
      std::swap(path.psi, trial.psi);
      const Eigen::VectorXd rNew = residualVec();
      const double rnNew = resNorm(rNew);
      if (rnNew < rn * (1.0 - 1e-4 * t) + 1e-300) {
        r = rNew;
        rn = rnNew;
        accepted = true;
        break;
      }
      std::swap(path.cfg, trial.cfg);
      std::swap(path.psi, trial.psi);
    }
    if (!accepted) break;
  }

  out.residual = rn;
  out.converged = rn <= tolAbs;
  out.actionProfile.resize(M);
  out.energyProfile.resize(M);
  for (int k = 0; k < M; ++k) {
    out.actionProfile[k] = evalAction(path.cfg[k], pert);
    const Eigen::ArrayXd e = energyDensity(path.cfg[k], path.psi[k], pert);
    out.energyProfile[k] = (e * gr.e2u).sum() * gr.hx * gr.hy;
  }
  // Broken-trajectory heuristic: an interior plateau of the energy density
  // integral between two humps.
  {
    const double emax = *std::max_element(out.energyProfile.begin(), out.energyProfile.end());
    int humps = 0;
    bool inHump = false;
    for (int k = 1; k + 1 < M; ++k) {
      const bool high = out.energyProfile[k] > 0.2 * emax;
      if (high && !inHump) {
        ++humps;
        inHump = true;
      } else if (!high && inHump) {
        inHump = false;
      }
    }
    out.brokenSuspected = humps >= 2 && emax > 0;
  }
  return out;
}

template <class G>
DecayFitResult decayFit(const TemporalPath<G>& path) {
  DecayFitResult out;
  const int M = path.slices();
  auto tailFit = [&](bool plus) {
    DecayFitTail t;
    const Configuration<G>& endCfg = plus ? path.cfg.back() : path.cfg.front();
    std::vector<double> xs, ys;
    const int third = M / 3;
    for (int i = 2; i < third; ++i) {
      const int k = plus ? M - 1 - i : i;
      const double d = configDistance(path.cfg[k], endCfg);
      if (d < 1e-13) continue;
      xs.push_back(path.s(k));
      ys.push_back(std::log(d));
    }
    const LineFit f = fitLine(xs, ys);
    if (f.degenerate) {
      t.degenerate = true;
      return t;
    }
    t.delta = plus ? -f.slope : f.slope;
    t.r2 = f.r2;
    // Convexity of f(s) = 1/2 |xi(s)|^2 for xi = d/ds (A, omega, Psi).
    std::vector<double> fs(M, 0.0);
    for (int k = 1; k + 1 < M; ++k) {
      double s2 = 0;
      Field1<G> da = path.cfg[k + 1].A;
      da.c1 = (da.c1 - path.cfg[k - 1].A.c1) / (2 * path.ds);
      da.c2 = (da.c2 - path.cfg[k - 1].A.c2) / (2 * path.ds);
      Field0<G> dw = path.cfg[k + 1].omega;
      dw.c = (dw.c - path.cfg[k - 1].omega.c) / (2 * path.ds);
      Field0<G> dp = path.psi[k + 1];
      dp.c = (dp.c - path.psi[k - 1].c) / (2 * path.ds);
      s2 = innerL2(da, da) + innerL2(dw, dw) + innerL2(dp, dp);
      fs[k] = 0.5 * s2;
    }
    const double dd = 0.9 * t.delta;
    t.minConvexityGap = 1e300;
    for (int i = 3; i < third; ++i) {
      const int k = plus ? M - 1 - i : i;
      if (k < 2 || k > M - 3) continue;
      const double fpp = (fs[k + 1] - 2 * fs[k] + fs[k - 1]) / (path.ds * path.ds);
      t.minConvexityGap = std::min(t.minConvexityGap, fpp - dd * dd * fs[k]);
    }
    if (t.minConvexityGap == 1e300) t.minConvexityGap = 0.0;
    return t;
  };
  out.minus = tailFit(false);
  out.plus = tailFit(true);
  return out;
}

template <class G>
CoercivityResult<G> coercivityEstimate(const Configuration<G>& cfg, const PerturbationSpec& pert,
                                       double gradInfBound, double degenerateTol) {
  CoercivityResult<G> out;
  out.preconditionHolds = gradientNormInf(cfg, pert) <= gradInfBound;
  Eigen::MatrixXd b = assembleBBlock(cfg, pert, true, true, nullptr);
  if constexpr (G::abelian) {
    const BState<G> st(cfg.grid());
    const Eigen::MatrixXd q = constPsiComplement<G>(cfg.grid(), st.size(), st.offPsi());
    b = (q.transpose() * b * q).eval();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()),
                                                    Eigen::EigenvaluesOnly);
  out.sigmaMin = es.eigenvalues().cwiseAbs().minCoeff();
  out.degenerate = out.sigmaMin < degenerateTol;
  out.c = out.degenerate ? 0.0 : 1.0 / (out.sigmaMin * out.sigmaMin);
  return out;
}

template <class G>
double omegaEquationResidual(const TemporalPath<G>& path, const PerturbationSpec& pert) {
  static_assert(G::abelian, "second-order omega residual implemented for the abelian case");
  const int M = path.slices();
  double worst = 0.0;
  for (int k = 1; k + 1 < M; ++k) {
    const auto& cfg = path.cfg[k];
    Field0<G> res(*path.grid);
    res.c = (path.cfg[k + 1].omega.c - 2 * cfg.omega.c + path.cfg[k - 1].omega.c) /
                (path.ds * path.ds) -
            (path.cfg[k + 1].omega.c - path.cfg[k - 1].omega.c) / (2 * path.ds);
    res.c -= hodge2(covD1(cfg.A, coD2(cfg.A, hodge0(cfg.omega)))).c;
    if (!pert.empty()) {
      const auto pv = holonomyPerturbation(*path.grid, cfg.A, cfg.omega, pert);
      res.c += hodge2(covD1(cfg.A, pv.X)).c;
    }
    worst = std::max(worst, normL2(res));
  }
  return worst;
}

}  // namespace ym
