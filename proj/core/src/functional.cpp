#include "ymlab/functional.hpp"

#include <Eigen/Dense>

namespace ym {

namespace {

// Squared local mismatch of g*cfg against ref restricted to the terms that
// depend on g at site z (edges touching z and the 0-form there).
template <class G>
double localMismatch(const Configuration<G>& cfg, const Configuration<G>& ref,
                     const std::vector<GroupElem<G>>& g, int z) {
  const auto& gr = cfg.grid();
  double s = 0;
  auto edgeTerm = [&](int base, int comp, int nbr, double hlen) {
    const Alg<G> a = comp == 0 ? cfg.A.at1(base) : cfg.A.at2(base);
    Alg<G> t = adjoint<G, double>(g[base], a);
    const Alg<G> mc = logmap<G>(g[base].dagger() * g[nbr]);
    const Alg<G> r = comp == 0 ? ref.A.at1(base) : ref.A.at2(base);
    double e = 0;
    for (int k = 0; k < G::dim; ++k) {
      const double d = t[k] + mc[k] / hlen - r[k];
      e += d * d;
    }
    return gr.w1(base) * e;
  };
  s += edgeTerm(z, 0, gr.ixp[z], gr.hx);
  s += edgeTerm(z, 1, gr.iyp[z], gr.hy);
  s += edgeTerm(gr.ixm[z], 0, z, gr.hx);
  s += edgeTerm(gr.iym[z], 1, z, gr.hy);
  const Alg<G> w = adjoint<G, double>(g[z], cfg.omega.at(z));
  const Alg<G> wr = ref.omega.at(z);
  double e = 0;
  for (int k = 0; k < G::dim; ++k) {
    const double d = w[k] - wr[k];
    e += d * d;
  }
  s += gr.w0(z) * e;
  return s;
}

}  // namespace

template <class G>
GaugeField<G> gaugeAlign(const Configuration<G>& cfg, const Configuration<G>& ref, int sweeps) {
  const auto& gr = cfg.grid();
  GaugeField<G> gf(gr);
  const double fd = 1e-5;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double moved = 0;
    for (int z = 0; z < gr.sites(); ++z) {
      // Damped Newton in exp(xi) g(z) with finite-difference derivatives.
      for (int iter = 0; iter < 3; ++iter) {
        Eigen::Matrix<double, G::dim, 1> grad;
        Eigen::Matrix<double, G::dim, G::dim> hess;
        const GroupElem<G> g0 = gf.g[z];
        auto eval = [&](const Eigen::Matrix<double, G::dim, 1>& xi) {
          Alg<G> x{};
          for (int k = 0; k < G::dim; ++k) x[k] = xi[k];
          gf.g[z] = expmap<G, double>(x) * g0;
          const double v = localMismatch<G>(cfg, ref, gf.g, z);
          gf.g[z] = g0;
          return v;
        };
        const double f0 = eval(Eigen::Matrix<double, G::dim, 1>::Zero());
        for (int k = 0; k < G::dim; ++k) {
          Eigen::Matrix<double, G::dim, 1> e = Eigen::Matrix<double, G::dim, 1>::Zero();
          e[k] = fd;
          const double fp = eval(e), fm = eval(-e);
          grad[k] = (fp - fm) / (2 * fd);
          hess(k, k) = (fp - 2 * f0 + fm) / (fd * fd);
        }
        for (int k = 0; k < G::dim; ++k)
          for (int l = k + 1; l < G::dim; ++l) {
            Eigen::Matrix<double, G::dim, 1> e = Eigen::Matrix<double, G::dim, 1>::Zero();
            e[k] = fd;
            e[l] = fd;
            const double fpp = eval(e);
            e[l] = -fd;
            const double fpm = eval(e);
            e[k] = -fd;
            const double fmm = eval(e);
            e[l] = fd;
            const double fmp = eval(e);
            hess(k, l) = hess(l, k) = (fpp - fpm - fmp + fmm) / (4 * fd * fd);
          }
        Eigen::Matrix<double, G::dim, G::dim> reg = hess;
        for (int k = 0; k < G::dim; ++k) reg(k, k) += 1e-10 + 1e-3 * std::abs(hess(k, k));
        Eigen::Matrix<double, G::dim, 1> step = -reg.ldlt().solve(grad);
        if (!step.allFinite()) break;
        // Backtracking on the local objective.
        double t = 1.0;
        bool ok = false;
        for (int bt = 0; bt < 8; ++bt, t *= 0.5) {
          if (eval(t * step) < f0) {
            ok = true;
            break;
          }
        }
        if (!ok) break;
        Alg<G> x{};
        for (int k = 0; k < G::dim; ++k) x[k] = t * step[k];
        gf.g[z] = expmap<G, double>(x) * gf.g[z];
        moved += step.norm() * t;
        if (step.norm() * t < 1e-12) break;
      }
    }
    if (moved < 1e-12) break;
  }
  return gf;
}

template GaugeField<U1> gaugeAlign<U1>(const Configuration<U1>&, const Configuration<U1>&, int);
template GaugeField<SU2> gaugeAlign<SU2>(const Configuration<SU2>&, const Configuration<SU2>&, int);

}  // namespace ym
