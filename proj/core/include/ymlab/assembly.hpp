#pragma once

#include <Eigen/Dense>
#include <functional>

#include "ymlab/functional.hpp"

namespace ym {

// Flattening between fields and Euclidean coordinate vectors scaled by the
// square roots of the L2 weights, so that plain dot products realize the
// metric inner products and symmetric operators assemble to symmetric
// matrices for any conformal factor.
template <class G>
struct Flattener {
  const TorusGrid* grid = nullptr;
  Eigen::ArrayXd s0, s1;    // sqrt weights per site for 0-/1-form dofs
  Eigen::ArrayXd i0, i1;    // inverses

  Flattener() = default;
  explicit Flattener(const TorusGrid& g) : grid(&g) {
    s0 = (g.e2u * (g.hx * g.hy)).sqrt();
    s1 = Eigen::ArrayXd::Constant(g.sites(), std::sqrt(g.hx * g.hy));
    i0 = s0.inverse();
    i1 = s1.inverse();
  }

  int dV() const { return G::dim * grid->sites(); }
  int n1() const { return 2 * dV(); }   // 1-form block
  int n0() const { return dV(); }       // 0-form block

  void pack0(const Field0<G>& f, Eigen::Ref<Eigen::VectorXd> out) const {
    const int V = grid->sites();
    for (int z = 0; z < V; ++z)
      for (int k = 0; k < G::dim; ++k) out[z * G::dim + k] = f.c(k, z) * s0[z];
  }
  void pack1(const Field1<G>& f, Eigen::Ref<Eigen::VectorXd> out) const {
    const int V = grid->sites();
    const int dv = dV();
    for (int z = 0; z < V; ++z)
      for (int k = 0; k < G::dim; ++k) {
        out[z * G::dim + k] = f.c1(k, z) * s1[z];
        out[dv + z * G::dim + k] = f.c2(k, z) * s1[z];
      }
  }
  Field0<G> unpack0(const Eigen::Ref<const Eigen::VectorXd>& in) const {
    Field0<G> f(*grid);
    const int V = grid->sites();
    for (int z = 0; z < V; ++z)
      for (int k = 0; k < G::dim; ++k) f.c(k, z) = in[z * G::dim + k] * i0[z];
    return f;
  }
  Field1<G> unpack1(const Eigen::Ref<const Eigen::VectorXd>& in) const {
    Field1<G> f(*grid);
    const int V = grid->sites();
    const int dv = dV();
    for (int z = 0; z < V; ++z)
      for (int k = 0; k < G::dim; ++k) {
        f.c1(k, z) = in[z * G::dim + k] * i1[z];
        f.c2(k, z) = in[dv + z * G::dim + k] * i1[z];
      }
    return f;
  }
};

enum class OperatorKind { H, B, Bf0, C, GaugeStack, SpaceTime };

struct OperatorAssembly {
  Eigen::MatrixXd m;
  OperatorKind kind = OperatorKind::B;
  double lambda = 0.0;  // for C_{f,lambda}

  double symmetryDefect() const { return (m - m.transpose()).cwiseAbs().maxCoeff(); }
};

// State vector for B-type operators: [alpha | v | psi], scaled coordinates.
template <class G>
struct BState {
  Flattener<G> fl;
  explicit BState(const TorusGrid& g) : fl(g) {}
  int size() const { return fl.n1() + 2 * fl.n0(); }
  int offA() const { return 0; }
  int offV() const { return fl.n1(); }
  int offPsi() const { return fl.n1() + fl.n0(); }

  Eigen::VectorXd pack(const Field1<G>& a, const Field0<G>& v, const Field0<G>& p) const {
    Eigen::VectorXd x(size());
    fl.pack1(a, x.segment(offA(), fl.n1()));
    fl.pack0(v, x.segment(offV(), fl.n0()));
    fl.pack0(p, x.segment(offPsi(), fl.n0()));
    return x;
  }
  void unpack(const Eigen::VectorXd& x, Field1<G>& a, Field0<G>& v, Field0<G>& p) const {
    a = fl.unpack1(x.segment(offA(), fl.n1()));
    v = fl.unpack0(x.segment(offV(), fl.n0()));
    p = fl.unpack0(x.segment(offPsi(), fl.n0()));
  }
};

// Apply the linearized-flow block operator B_{(A,omega,0)} with optional
// perturbation derivative terms (includeDX / includeDY select B_f vs B_{f,0}
// vs the unperturbed B).
template <class G>
Eigen::VectorXd applyB(const BState<G>& st, const Configuration<G>& cfg,
                       const PerturbationSpec& pert, bool includeDX, bool includeDY,
                       const Eigen::VectorXd& x) {
  Field1<G> a;
  Field0<G> v, p;
  st.unpack(x, a, v, p);
  const auto& A = cfg.A;
  const auto& om = cfg.omega;

  Field1<G> r1 = starBracket1(om, a);
  {
    const Field1<G> t = coD2(A, hodge0(v));
    r1.c1 += t.c1;
    r1.c2 += t.c2;
    const Field1<G> dpsi = covD0(A, p);
    r1.c1 -= dpsi.c1;
    r1.c2 -= dpsi.c2;
  }
  Field0<G> r2 = hodge2(covD1(A, a));
  r2.c -= v.c;
  r2.c -= bracketField(om, p).c;
  Field0<G> r3 = coD1(A, a);
  r3.c = -r3.c;
  r3.c += bracketField(om, v).c;

  if (!pert.empty() && (includeDX || includeDY)) {
    const auto dp = applyPerturbationHessian(cfg.grid(), A, om, pert, a, v);
    if (includeDX) {
      r1.c1 -= dp.dX.c1;
      r1.c2 -= dp.dX.c2;
    }
    if (includeDY) r2.c += dp.dY.c;
  }

  Eigen::VectorXd out(st.size());
  st.fl.pack1(r1, out.segment(st.offA(), st.fl.n1()));
  st.fl.pack0(r2, out.segment(st.offV(), st.fl.n0()));
  st.fl.pack0(r3, out.segment(st.offPsi(), st.fl.n0()));
  return out;
}

// State for C_{f,lambda}: [alpha | psi].
template <class G>
struct CState {
  Flattener<G> fl;
  explicit CState(const TorusGrid& g) : fl(g) {}
  int size() const { return fl.n1() + fl.n0(); }
  int offA() const { return 0; }
  int offPsi() const { return fl.n1(); }
};

// v reconstructed from an eigenpair of B_{f,0} at eigenvalue lambda.
template <class G>
Field0<G> reconstructV(const Configuration<G>& cfg, double lambda, const Field1<G>& a,
                       const Field0<G>& p) {
  Field0<G> v = hodge2(covD1(cfg.A, a));
  v.c -= bracketField(cfg.omega, p).c;
  v.c *= 1.0 / (lambda + 1.0);
  return v;
}

template <class G>
Eigen::VectorXd applyC(const CState<G>& st, const Configuration<G>& cfg,
                       const PerturbationSpec& pert, double lambda, const Eigen::VectorXd& x) {
  if (std::abs(lambda + 1.0) < 1e-12) throw std::invalid_argument("C_{f,lambda}: lambda = -1");
  Field1<G> a = st.fl.unpack1(x.segment(st.offA(), st.fl.n1()));
  Field0<G> p = st.fl.unpack0(x.segment(st.offPsi(), st.fl.n0()));
  const Field0<G> v = reconstructV(cfg, lambda, a, p);

  Field1<G> r1 = starBracket1(cfg.omega, a);
  {
    const Field1<G> t = coD2(cfg.A, hodge0(v));
    r1.c1 += t.c1;
    r1.c2 += t.c2;
    const Field1<G> dpsi = covD0(cfg.A, p);
    r1.c1 -= dpsi.c1;
    r1.c2 -= dpsi.c2;
  }
  Field0<G> r2 = coD1(cfg.A, a);
  r2.c = -r2.c;
  r2.c += bracketField(cfg.omega, v).c;

  if (!pert.empty()) {
    const auto dp = applyPerturbationHessian(cfg.grid(), cfg.A, cfg.omega, pert, a, v);
    r1.c1 -= dp.dX.c1;
    r1.c2 -= dp.dX.c2;
  }

  Eigen::VectorXd out(st.size());
  st.fl.pack1(r1, out.segment(st.offA(), st.fl.n1()));
  st.fl.pack0(r2, out.segment(st.offPsi(), st.fl.n0()));
  return out;
}

// Perturbed Yang-Mills Hessian on 1-forms:
// H = d_A^* d_A + *[ *F_A ^ . ] - dX_f(A).
template <class G>
Eigen::VectorXd applyH(const Flattener<G>& fl, const Configuration<G>& cfg,
                       const PerturbationSpec& pert, const Eigen::VectorXd& x) {
  Field1<G> a = fl.unpack1(x);
  Field1<G> r = coD2(cfg.A, covD1(cfg.A, a));
  const Field0<G> sF = hodge2(curvature(cfg.A));
  const Field1<G> t = starBracket1(sF, a);
  r.c1 += t.c1;
  r.c2 += t.c2;
  if (!pert.empty()) {
    const Field0<G> zero(cfg.grid());
    const auto dp = applyPerturbationHessian(cfg.grid(), cfg.A, cfg.omega, pert, a, zero);
    r.c1 -= dp.dX.c1;
    r.c2 -= dp.dX.c2;
  }
  Eigen::VectorXd out(fl.n1());
  fl.pack1(r, out);
  return out;
}

// Infinitesimal gauge action phi -> (d_A phi, [omega ^ phi]) as a matrix
// from scaled 0-form coordinates to scaled (1-form, 0-form) coordinates.
template <class G>
Eigen::MatrixXd assembleGaugeStack(const Configuration<G>& cfg) {
  const Flattener<G> fl(cfg.grid());
  const int n = fl.n0();
  Eigen::MatrixXd m(fl.n1() + fl.n0(), n);
  Eigen::VectorXd col(fl.n1() + fl.n0());
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    const Field0<G> phi = fl.unpack0(e);
    const Field1<G> da = covD0(cfg.A, phi);
    const Field0<G> bw = bracketField(cfg.omega, phi);
    fl.pack1(da, col.segment(0, fl.n1()));
    fl.pack0(bw, col.segment(fl.n1(), fl.n0()));
    m.col(j) = col;
  }
  return m;
}

inline Eigen::MatrixXd assembleDense(int n,
                                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op) {
  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    m.col(j) = op(e);
    e[j] = 0.0;
  }
  return m;
}

template <class G>
OperatorAssembly assembleB(const Configuration<G>& cfg, const PerturbationSpec& pert,
                           bool includeDX = true, bool includeDY = true) {
  const BState<G> st(cfg.grid());
  OperatorAssembly a;
  a.kind = includeDY ? OperatorKind::B : OperatorKind::Bf0;
  a.m = assembleDense(st.size(), [&](const Eigen::VectorXd& x) {
    return applyB(st, cfg, pert, includeDX, includeDY, x);
  });
  return a;
}

template <class G>
OperatorAssembly assembleC(const Configuration<G>& cfg, const PerturbationSpec& pert,
                           double lambda) {
  const CState<G> st(cfg.grid());
  OperatorAssembly a;
  a.kind = OperatorKind::C;
  a.lambda = lambda;
  a.m = assembleDense(st.size(), [&](const Eigen::VectorXd& x) {
    return applyC(st, cfg, pert, lambda, x);
  });
  return a;
}

template <class G>
OperatorAssembly assembleH(const Configuration<G>& cfg, const PerturbationSpec& pert) {
  const Flattener<G> fl(cfg.grid());
  OperatorAssembly a;
  a.kind = OperatorKind::H;
  a.m = assembleDense(fl.n1(), [&](const Eigen::VectorXd& x) {
    return applyH(fl, cfg, pert, x);
  });
  return a;
}

// Orthonormal basis of the Coulomb slice ker(coD1(A, .)) inside scaled
// 1-form coordinates.  Exact transposes make this the exact orthogonal
// complement of the gauge orbit image.
template <class G>
Eigen::MatrixXd sliceBasis(const Configuration<G>& cfg) {
  const Flattener<G> fl(cfg.grid());
  Eigen::MatrixXd m(fl.n0(), fl.n1());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(fl.n1());
  Eigen::VectorXd col(fl.n0());
  for (int j = 0; j < fl.n1(); ++j) {
    e[j] = 1.0;
    const Field0<G> r = coD1(cfg.A, fl.unpack1(e));
    fl.pack0(r, col);
    m.col(j) = col;
    e[j] = 0.0;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const double tol = 1e-10 * std::max(1.0, svd.singularValues().size() > 0 ? svd.singularValues()[0] : 1.0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > tol) ++rank;
  return svd.matrixV().rightCols(fl.n1() - rank);
}

// For u(1) the constant 0-form stabilizer is quotiented out of the psi block
// (and of any other 0-form block): returns an orthonormal basis of the
// complement of the constants within the given block of an n-dim state.
template <class G>
Eigen::MatrixXd constPsiComplement(const TorusGrid& grid, int n, int offPsi) {
  const Flattener<G> fl(grid);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, G::dim);
  for (int z = 0; z < grid.sites(); ++z)
    for (int k = 0; k < G::dim; ++k) c(offPsi + z * G::dim + k, k) = fl.s0[z];
  // Householder QR of [c | I] and drop the first dim columns.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - G::dim);
}

struct SpectrumHead {
  std::vector<double> values;  // eigenvalues closest to zero, sorted by |.|
};

inline SpectrumHead spectrumHead(const Eigen::VectorXd& eigs, int count) {
  std::vector<double> v(eigs.data(), eigs.data() + eigs.size());
  std::sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (static_cast<int>(v.size()) > count) v.resize(count);
  SpectrumHead h;
  h.values = std::move(v);
  return h;
}

}  // namespace ym
