#pragma once

#include <string>
#include <vector>

#include "ymlab/lattice.hpp"

namespace ym {

enum class Profile { ReTrace, ReTraceSq };

inline const char* profileName(Profile p) {
  return p == Profile::ReTrace ? "re_trace" : "re_trace_sq";
}
Profile profileFromName(const std::string& s);

// A closed axis-aligned lattice path plus a t-winding number.  The winding
// realizes the omega-dependence of the perturbation: the loop is read as a
// loop on the product of the surface with a circle, where the connection is
// A + omega dt with omega constant in t.
struct LatticeLoop {
  std::vector<int> sites;  // consecutive nearest neighbors; closes back to front
  int winding = 0;
  double weight = 1.0;
  Profile profile = Profile::ReTrace;
};

struct PerturbationSpec {
  std::vector<LatticeLoop> loops;
  double amplitude = 0.0;

  bool empty() const { return loops.empty() || amplitude == 0.0; }
  bool dependsOnOmega() const {
    for (const auto& l : loops)
      if (l.winding != 0) return true;
    return false;
  }
};

LatticeLoop cycleX(const TorusGrid& g, int row, double weight = 1.0,
                   Profile p = Profile::ReTrace, int winding = 0);
LatticeLoop cycleY(const TorusGrid& g, int col, double weight = 1.0,
                   Profile p = Profile::ReTrace, int winding = 0);
LatticeLoop rectangleLoop(const TorusGrid& g, int x0, int y0, int w, int h, double weight = 1.0,
                          Profile p = Profile::ReTrace, int winding = 0);

// Bound on |h_f| and on the L2 norm of Y_f used by the trajectory estimates:
// sum over loops of |amplitude * weight| * max |profile|.
template <class G>
double perturbationBound(const PerturbationSpec& pert) {
  const double tmax = static_cast<double>(G::n);
  double c = 0;
  for (const auto& l : pert.loops) {
    const double pm = l.profile == Profile::ReTrace ? tmax : tmax * tmax;
    c += std::abs(pert.amplitude * l.weight) * pm;
  }
  return c;
}

struct EdgeRef {
  int site = 0;   // base site of the traversed edge
  int comp = 0;   // 0: x-edge, 1: y-edge
  double sign = 1.0;
  double hlen = 0.0;
};

struct CompiledLoop {
  std::vector<EdgeRef> edges;
  int basepoint = 0;
  int winding = 0;
  double cweight = 0.0;  // amplitude * weight
  Profile profile = Profile::ReTrace;
};

// Validates closedness and resolves edges; throws on a non-closed loop.
std::vector<CompiledLoop> compileLoops(const TorusGrid& g, const PerturbationSpec& pert);

template <class G, class S>
struct LoopEval {
  S h{};
  std::vector<AlgVec<G, S>> dA;  // dh / d(A coefficient) per edge
  AlgVec<G, S> dOmega{};         // dh / d(omega coefficient) at the basepoint
};

// Holonomy of one loop plus exact first derivatives via insertion of dexp
// factors between cached prefix/suffix products.
template <class G, class S>
LoopEval<G, S> evalLoop(const CompiledLoop& lp, const std::vector<AlgVec<G, S>>& edgeA,
                        const AlgVec<G, S>& omegaB, bool withGrad) {
  using M = GroupMat<G, S>;
  const int m = static_cast<int>(lp.edges.size());
  const bool hasT = lp.winding != 0;
  const int nf = m + (hasT ? 1 : 0);

  std::vector<AlgVec<G, S>> arg(nf);
  if (hasT) {
    for (int k = 0; k < G::dim; ++k) arg[0][k] = S(lp.winding) * omegaB[k];
  }
  for (int j = 0; j < m; ++j) {
    AlgVec<G, S> x{};
    const auto& e = lp.edges[j];
    for (int k = 0; k < G::dim; ++k) x[k] = S(e.sign * e.hlen) * edgeA[j][k];
    arg[(hasT ? 1 : 0) + j] = x;
  }

  std::vector<M> fac(nf);
  for (int j = 0; j < nf; ++j) fac[j] = expmap<G, S>(arg[j]);

  std::vector<M> pre(nf + 1), suf(nf + 1);
  pre[0] = M::identity();
  for (int j = 0; j < nf; ++j) pre[j + 1] = pre[j] * fac[j];
  suf[nf] = M::identity();
  for (int j = nf - 1; j >= 0; --j) suf[j] = fac[j] * suf[j + 1];

  const S tr = pre[nf].trace().real();
  LoopEval<G, S> out;
  S pval, pder;
  if (lp.profile == Profile::ReTrace) {
    pval = tr;
    pder = S(1);
  } else {
    pval = tr * tr;
    pder = S(2) * tr;
  }
  out.h = S(lp.cweight) * pval;
  if (!withGrad) return out;

  const S gscale = S(lp.cweight) * pder;
  auto insertion = [&](int j, const AlgVec<G, S>& xi) -> S {
    // d ReTr(rho)/dt with factor j perturbed: Re tr(P_j exp(X_j) dexpFactor S_{j+1}).
    const M d = dexpFactor<G, S>(arg[j], xi);
    return (pre[j] * fac[j] * d * suf[j + 1]).trace().real();
  };

  out.dA.assign(m, AlgVec<G, S>{});
  for (int j = 0; j < m; ++j) {
    const auto& e = lp.edges[j];
    for (int k = 0; k < G::dim; ++k) {
      AlgVec<G, S> xi{};
      xi[k] = S(e.sign * e.hlen);
      out.dA[j][k] = gscale * insertion((hasT ? 1 : 0) + j, xi);
    }
  }
  if (hasT) {
    for (int k = 0; k < G::dim; ++k) {
      AlgVec<G, S> xi{};
      xi[k] = S(lp.winding);
      out.dOmega[k] = gscale * insertion(0, xi);
    }
  }
  return out;
}

template <class G>
struct PerturbationValue {
  double h = 0.0;
  Field1<G> X;
  Field0<G> Y;
};

// h_f plus the L2-Riesz representers (X_f, Y_f) of (-dh/dA, +dh/domega).
template <class G>
PerturbationValue<G> holonomyPerturbation(const TorusGrid& grid, const Field1<G>& A,
                                          const Field0<G>& omega, const PerturbationSpec& pert) {
  PerturbationValue<G> out;
  out.X = Field1<G>(grid);
  out.Y = Field0<G>(grid);
  if (pert.empty()) return out;
  const auto loops = compileLoops(grid, pert);
  for (const auto& lp : loops) {
    std::vector<Alg<G>> edgeA(lp.edges.size());
    for (std::size_t j = 0; j < lp.edges.size(); ++j) {
      const auto& e = lp.edges[j];
      for (int k = 0; k < G::dim; ++k) edgeA[j][k] = A.comp(e.comp)(k, e.site);
    }
    Alg<G> ob{};
    for (int k = 0; k < G::dim; ++k) ob[k] = omega.c(k, lp.basepoint);
    const auto ev = evalLoop<G, double>(lp, edgeA, ob, true);
    out.h += ev.h;
    for (std::size_t j = 0; j < lp.edges.size(); ++j) {
      const auto& e = lp.edges[j];
      for (int k = 0; k < G::dim; ++k)
        out.X.comp(e.comp)(k, e.site) -= ev.dA[j][k] / grid.w1(e.site);
    }
    if (lp.winding != 0)
      for (int k = 0; k < G::dim; ++k)
        out.Y.c(k, lp.basepoint) += ev.dOmega[k] / grid.w0(lp.basepoint);
  }
  return out;
}

template <class G>
double evalPerturbation(const TorusGrid& grid, const Field1<G>& A, const Field0<G>& omega,
                        const PerturbationSpec& pert) {
  double h = 0.0;
  if (pert.empty()) return h;
  for (const auto& lp : compileLoops(grid, pert)) {
    std::vector<Alg<G>> edgeA(lp.edges.size());
    for (std::size_t j = 0; j < lp.edges.size(); ++j) {
      const auto& e = lp.edges[j];
      for (int k = 0; k < G::dim; ++k) edgeA[j][k] = A.comp(e.comp)(k, e.site);
    }
    Alg<G> ob{};
    for (int k = 0; k < G::dim; ++k) ob[k] = omega.c(k, lp.basepoint);
    h += evalLoop<G, double>(lp, edgeA, ob, false).h;
  }
  return h;
}

template <class G>
struct PerturbationHessianApply {
  Field1<G> dX;
  Field0<G> dY;
};

// Exact directional derivative of (X_f, Y_f) along (alpha, v): the loop
// gradient pipeline re-run on first-order jets.
template <class G>
PerturbationHessianApply<G> applyPerturbationHessian(const TorusGrid& grid, const Field1<G>& A,
                                                     const Field0<G>& omega,
                                                     const PerturbationSpec& pert,
                                                     const Field1<G>& alpha, const Field0<G>& v) {
  PerturbationHessianApply<G> out{Field1<G>(grid), Field0<G>(grid)};
  if (pert.empty()) return out;
  for (const auto& lp : compileLoops(grid, pert)) {
    std::vector<AlgVec<G, Dual>> edgeA(lp.edges.size());
    for (std::size_t j = 0; j < lp.edges.size(); ++j) {
      const auto& e = lp.edges[j];
      for (int k = 0; k < G::dim; ++k)
        edgeA[j][k] = Dual(A.comp(e.comp)(k, e.site), alpha.comp(e.comp)(k, e.site));
    }
    AlgVec<G, Dual> ob{};
    for (int k = 0; k < G::dim; ++k)
      ob[k] = Dual(omega.c(k, lp.basepoint), v.c(k, lp.basepoint));
    const auto ev = evalLoop<G, Dual>(lp, edgeA, ob, true);
    for (std::size_t j = 0; j < lp.edges.size(); ++j) {
      const auto& e = lp.edges[j];
      for (int k = 0; k < G::dim; ++k)
        out.dX.comp(e.comp)(k, e.site) -= ev.dA[j][k].b / grid.w1(e.site);
    }
    if (lp.winding != 0)
      for (int k = 0; k < G::dim; ++k) out.dY.c(k, lp.basepoint) += ev.dOmega[k].b / grid.w0(lp.basepoint);
  }
  return out;
}

// Sites/components whose dofs can interact with the perturbation Hessian.
struct PertSupport {
  std::vector<std::pair<int, int>> aDofs;  // (comp, site)
  std::vector<int> omegaSites;
};
PertSupport perturbationSupport(const TorusGrid& g, const PerturbationSpec& pert);

std::uint64_t perturbationHash(const PerturbationSpec& pert);

}  // namespace ym
