#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ymlab/lie.hpp"
#include "ymlab/util.hpp"

namespace ym {

// Flat 2-torus grid with periodic vertex-colocated fields and an optional
// conformal factor u (metric e^{2u}(dx^2 + dy^2)).
struct TorusGrid {
  int nx = 0, ny = 0;
  double lx = 0, ly = 0;
  double hx = 0, hy = 0;
  Eigen::ArrayXd u;     // conformal factor per site
  Eigen::ArrayXd e2u;   // exp(2u)
  Eigen::ArrayXd em2u;  // exp(-2u)
  std::vector<int> ixp, ixm, iyp, iym;

  TorusGrid() = default;
  TorusGrid(int nx_, int ny_, double lx_, double ly_)
      : TorusGrid(nx_, ny_, lx_, ly_, Eigen::ArrayXd::Zero(nx_ * ny_)) {}
  TorusGrid(int nx_, int ny_, double lx_, double ly_, Eigen::ArrayXd u_)
      : nx(nx_), ny(ny_), lx(lx_), ly(ly_), u(std::move(u_)) {
    if (nx < 4 || ny < 4) throw std::invalid_argument("TorusGrid: need nx,ny >= 4");
    if (lx <= 0 || ly <= 0) throw std::invalid_argument("TorusGrid: side lengths must be positive");
    if (u.size() != nx * ny) throw std::invalid_argument("TorusGrid: conformal factor size mismatch");
    hx = lx / nx;
    hy = ly / ny;
    e2u = (2.0 * u).exp();
    em2u = (-2.0 * u).exp();
    const int v = nx * ny;
    ixp.resize(v); ixm.resize(v); iyp.resize(v); iym.resize(v);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const int z = idx(x, y);
        ixp[z] = idx((x + 1) % nx, y);
        ixm[z] = idx((x + nx - 1) % nx, y);
        iyp[z] = idx(x, (y + 1) % ny);
        iym[z] = idx(x, (y + ny - 1) % ny);
      }
  }

  int sites() const { return nx * ny; }
  int idx(int x, int y) const { return x + nx * y; }
  int siteX(int z) const { return z % nx; }
  int siteY(int z) const { return z / nx; }
  double area() const { return (e2u * (hx * hy)).sum(); }
  bool flat() const { return (u.abs() < 1e-15).all(); }

  // L2 weight per site by form degree.
  double w0(int z) const { return e2u[z] * hx * hy; }
  double w1(int) const { return hx * hy; }
  double w2(int z) const { return em2u[z] * hx * hy; }

  bool sameGeometry(const TorusGrid& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
};

namespace detail {

// Gather columns by neighbor table.
inline Eigen::ArrayXXd shift(const Eigen::ArrayXXd& a, const std::vector<int>& tbl) {
  Eigen::ArrayXXd r(a.rows(), a.cols());
  for (int z = 0; z < a.cols(); ++z) r.col(z) = a.col(tbl[z]);
  return r;
}

// Pointwise bracket on coefficient arrays (dim x V).
template <class G>
Eigen::ArrayXXd brk(const Eigen::ArrayXXd& x, const Eigen::ArrayXXd& y) {
  if constexpr (G::abelian) {
    return Eigen::ArrayXXd::Zero(x.rows(), x.cols());
  } else {
    Eigen::ArrayXXd r(3, x.cols());
    r.row(0) = 2.0 * (x.row(1) * y.row(2) - x.row(2) * y.row(1));
    r.row(1) = 2.0 * (x.row(2) * y.row(0) - x.row(0) * y.row(2));
    r.row(2) = 2.0 * (x.row(0) * y.row(1) - x.row(1) * y.row(0));
    return r;
  }
}

}  // namespace detail

template <class G>
struct Field0 {
  const TorusGrid* grid = nullptr;
  Eigen::ArrayXXd c;  // dim x V

  Field0() = default;
  explicit Field0(const TorusGrid& g) : grid(&g), c(Eigen::ArrayXXd::Zero(G::dim, g.sites())) {}

  Alg<G> at(int z) const {
    Alg<G> x{};
    for (int k = 0; k < G::dim; ++k) x[k] = c(k, z);
    return x;
  }
  void set(int z, const Alg<G>& x) {
    for (int k = 0; k < G::dim; ++k) c(k, z) = x[k];
  }
};

template <class G>
struct Field1 {
  const TorusGrid* grid = nullptr;
  Eigen::ArrayXXd c1, c2;  // dx and dy components, dim x V

  Field1() = default;
  explicit Field1(const TorusGrid& g)
      : grid(&g),
        c1(Eigen::ArrayXXd::Zero(G::dim, g.sites())),
        c2(Eigen::ArrayXXd::Zero(G::dim, g.sites())) {}

  const Eigen::ArrayXXd& comp(int i) const { return i == 0 ? c1 : c2; }
  Eigen::ArrayXXd& comp(int i) { return i == 0 ? c1 : c2; }

  Alg<G> at1(int z) const {
    Alg<G> x{};
    for (int k = 0; k < G::dim; ++k) x[k] = c1(k, z);
    return x;
  }
  Alg<G> at2(int z) const {
    Alg<G> x{};
    for (int k = 0; k < G::dim; ++k) x[k] = c2(k, z);
    return x;
  }
};

template <class G>
struct Field2 {
  const TorusGrid* grid = nullptr;
  Eigen::ArrayXXd c;  // coefficient of dx ^ dy, dim x V

  Field2() = default;
  explicit Field2(const TorusGrid& g) : grid(&g), c(Eigen::ArrayXXd::Zero(G::dim, g.sites())) {}
};

template <class G>
void requireSharedGrid(const TorusGrid* a, const TorusGrid* b) {
  if (a == nullptr || b == nullptr || !a->sameGeometry(*b))
    throw std::invalid_argument("fields live on mismatched grids");
}

// ---- L2 inner products (metric weights) ----

template <class G>
double innerL2(const Field0<G>& f, const Field0<G>& g) {
  requireSharedGrid<G>(f.grid, g.grid);
  const auto& gr = *f.grid;
  return ((f.c * g.c).colwise().sum().transpose() * gr.e2u).sum() * gr.hx * gr.hy;
}

template <class G>
double innerL2(const Field1<G>& a, const Field1<G>& b) {
  requireSharedGrid<G>(a.grid, b.grid);
  const auto& gr = *a.grid;
  return ((a.c1 * b.c1 + a.c2 * b.c2).sum()) * gr.hx * gr.hy;
}

template <class G>
double innerL2(const Field2<G>& f, const Field2<G>& g) {
  requireSharedGrid<G>(f.grid, g.grid);
  const auto& gr = *f.grid;
  return ((f.c * g.c).colwise().sum().transpose() * gr.em2u).sum() * gr.hx * gr.hy;
}

template <class F>
double normL2(const F& f) {
  return std::sqrt(std::max(0.0, innerL2(f, f)));
}

// ---- covariant exterior calculus ----

// (d_A phi)_i = forward difference + pointwise bracket [A_i, phi].
template <class G>
Field1<G> covD0(const Field1<G>& A, const Field0<G>& phi) {
  requireSharedGrid<G>(A.grid, phi.grid);
  const auto& g = *A.grid;
  Field1<G> r(g);
  r.c1 = (detail::shift(phi.c, g.ixp) - phi.c) / g.hx + detail::brk<G>(A.c1, phi.c);
  r.c2 = (detail::shift(phi.c, g.iyp) - phi.c) / g.hy + detail::brk<G>(A.c2, phi.c);
  return r;
}

// d_A alpha = D1 a2 - D2 a1 + [A1,a2] - [A2,a1].
template <class G>
Field2<G> covD1(const Field1<G>& A, const Field1<G>& a) {
  requireSharedGrid<G>(A.grid, a.grid);
  const auto& g = *A.grid;
  Field2<G> r(g);
  r.c = (detail::shift(a.c2, g.ixp) - a.c2) / g.hx - (detail::shift(a.c1, g.iyp) - a.c1) / g.hy +
        detail::brk<G>(A.c1, a.c2) - detail::brk<G>(A.c2, a.c1);
  return r;
}

// Exact metric transpose of covD0: <covD0(A,phi), a>_1 = <phi, coD1(A,a)>_0.
template <class G>
Field0<G> coD1(const Field1<G>& A, const Field1<G>& a) {
  requireSharedGrid<G>(A.grid, a.grid);
  const auto& g = *A.grid;
  Field0<G> r(g);
  Eigen::ArrayXXd s = (a.c1 - detail::shift(a.c1, g.ixm)) / g.hx +
                      (a.c2 - detail::shift(a.c2, g.iym)) / g.hy +
                      detail::brk<G>(A.c1, a.c1) + detail::brk<G>(A.c2, a.c2);
  r.c = -(s.rowwise() * g.em2u.transpose());
  return r;
}

// Exact metric transpose of covD1: <covD1(A,a), b>_2 = <a, coD2(A,b)>_1.
template <class G>
Field1<G> coD2(const Field1<G>& A, const Field2<G>& b) {
  requireSharedGrid<G>(A.grid, b.grid);
  const auto& g = *A.grid;
  Field1<G> r(g);
  const Eigen::ArrayXXd bt = b.c.rowwise() * g.em2u.transpose();
  r.c1 = (bt - detail::shift(bt, g.iym)) / g.hy + detail::brk<G>(A.c2, bt);
  r.c2 = -(bt - detail::shift(bt, g.ixm)) / g.hx - detail::brk<G>(A.c1, bt);
  return r;
}

// ---- Hodge stars (orientation *dx = dy) ----

template <class G>
Field2<G> hodge0(const Field0<G>& f) {
  Field2<G> r(*f.grid);
  r.c = f.c.rowwise() * f.grid->e2u.transpose();
  return r;
}

template <class G>
Field0<G> hodge2(const Field2<G>& b) {
  Field0<G> r(*b.grid);
  r.c = b.c.rowwise() * b.grid->em2u.transpose();
  return r;
}

template <class G>
Field1<G> hodge1(const Field1<G>& a) {
  Field1<G> r(*a.grid);
  r.c1 = -a.c2;
  r.c2 = a.c1;
  return r;
}

// F_A = D1 A2 - D2 A1 + [A1, A2] pointwise.
template <class G>
Field2<G> curvature(const Field1<G>& A) {
  const auto& g = *A.grid;
  Field2<G> r(g);
  r.c = (detail::shift(A.c2, g.ixp) - A.c2) / g.hx - (detail::shift(A.c1, g.iyp) - A.c1) / g.hy +
        detail::brk<G>(A.c1, A.c2);
  return r;
}

// The curvature action appearing in the exact discrete identity
// d_A d_A phi = [D1 A2, phi(.+ex)] - [D2 A1, phi(.+ey)] + [[A1,A2], phi].
// Agrees with [F_A, phi] up to the one-sided O(h) stencil bias and exactly
// in the abelian case (both vanish).
template <class G>
Field2<G> curvatureBracket(const Field1<G>& A, const Field0<G>& phi) {
  requireSharedGrid<G>(A.grid, phi.grid);
  const auto& g = *A.grid;
  Field2<G> r(g);
  const Eigen::ArrayXXd d1a2 = (detail::shift(A.c2, g.ixp) - A.c2) / g.hx;
  const Eigen::ArrayXXd d2a1 = (detail::shift(A.c1, g.iyp) - A.c1) / g.hy;
  r.c = detail::brk<G>(d1a2, detail::shift(phi.c, g.ixp)) -
        detail::brk<G>(d2a1, detail::shift(phi.c, g.iyp)) +
        detail::brk<G>(detail::brk<G>(A.c1, A.c2), phi.c);
  return r;
}

// ---- pointwise helpers ----

template <class G>
Field0<G> bracketField(const Field0<G>& x, const Field0<G>& y) {
  Field0<G> r(*x.grid);
  r.c = detail::brk<G>(x.c, y.c);
  return r;
}

template <class G>
Field1<G> bracketField(const Field0<G>& x, const Field1<G>& y) {
  Field1<G> r(*y.grid);
  r.c1 = detail::brk<G>(x.c, y.c1);
  r.c2 = detail::brk<G>(x.c, y.c2);
  return r;
}

template <class G>
Field2<G> bracketField(const Field0<G>& x, const Field2<G>& y) {
  Field2<G> r(*y.grid);
  r.c = detail::brk<G>(x.c, y.c);
  return r;
}

// *[omega ^ alpha] on 1-forms: (-[w,a2], [w,a1]); exactly symmetric pointwise.
template <class G>
Field1<G> starBracket1(const Field0<G>& w, const Field1<G>& a) {
  Field1<G> r(*a.grid);
  r.c1 = -detail::brk<G>(w.c, a.c2);
  r.c2 = detail::brk<G>(w.c, a.c1);
  return r;
}

// ---- random smooth fields (band-limited, for tests and the check task) ----

namespace detail {
// Band-limited random field with pointwise standard deviation ~ amp.
inline Eigen::ArrayXXd randomSmoothArray(const TorusGrid& g, int dim, Rng& rng, int kmax,
                                         double amp) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const double scale = amp / (2 * kmax + 1);
  Eigen::ArrayXXd r = Eigen::ArrayXXd::Zero(dim, g.sites());
  for (int k = 0; k < dim; ++k)
    for (int kx = -kmax; kx <= kmax; ++kx)
      for (int ky = -kmax; ky <= kmax; ++ky) {
        const double cc = nd(rng), cs = nd(rng);
        for (int z = 0; z < g.sites(); ++z) {
          const double ph = 2 * M_PI * (kx * g.siteX(z) / double(g.nx) + ky * g.siteY(z) / double(g.ny));
          r(k, z) += scale * (cc * std::cos(ph) + cs * std::sin(ph));
        }
      }
  return r;
}
}  // namespace detail

template <class G>
Field0<G> randomField0(const TorusGrid& g, Rng& rng, int kmax = 2, double amp = 0.1) {
  Field0<G> f(g);
  f.c = detail::randomSmoothArray(g, G::dim, rng, kmax, amp);
  return f;
}

template <class G>
Field1<G> randomField1(const TorusGrid& g, Rng& rng, int kmax = 2, double amp = 0.1) {
  Field1<G> f(g);
  f.c1 = detail::randomSmoothArray(g, G::dim, rng, kmax, amp);
  f.c2 = detail::randomSmoothArray(g, G::dim, rng, kmax, amp);
  return f;
}

template <class G>
Field2<G> randomField2(const TorusGrid& g, Rng& rng, int kmax = 2, double amp = 0.1) {
  Field2<G> f(g);
  f.c = detail::randomSmoothArray(g, G::dim, rng, kmax, amp);
  return f;
}

}  // namespace ym
