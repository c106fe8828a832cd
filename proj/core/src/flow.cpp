#include "ymlab/flow.hpp"

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab,
             const int* ldab, int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info);
}

namespace ym {

Eigen::VectorXd BlockTridiag::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(size());
  for (int k = 0; k < slices; ++k) {
    Eigen::VectorXd t = diag[k] * x.segment(k * n, n);
    if (sub[k] != 0.0 && k > 0) t += sub[k] * x.segment((k - 1) * n, n);
    if (super[k] != 0.0 && k + 1 < slices) t += super[k] * x.segment((k + 1) * n, n);
    y.segment(k * n, n) = t;
  }
  return y;
}

Eigen::VectorXd BlockTridiag::applyTranspose(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(size());
  for (int k = 0; k < slices; ++k) {
    Eigen::VectorXd t = diag[k].transpose() * x.segment(k * n, n);
    if (k + 1 < slices && sub[k + 1] != 0.0) t += sub[k + 1] * x.segment((k + 1) * n, n);
    if (k > 0 && super[k - 1] != 0.0) t += super[k - 1] * x.segment((k - 1) * n, n);
    y.segment(k * n, n) = t;
  }
  return y;
}

BlockTridiag BlockTridiag::transpose() const {
  BlockTridiag t;
  t.slices = slices;
  t.n = n;
  t.diag.resize(slices);
  t.sub.assign(slices, 0.0);
  t.super.assign(slices, 0.0);
  for (int k = 0; k < slices; ++k) {
    t.diag[k] = diag[k].transpose();
    if (k + 1 < slices) t.super[k] = sub[k + 1];
    if (k > 0) t.sub[k] = super[k - 1];
  }
  return t;
}

void BandedFactor::factorize(const BlockTridiag& op) {
  n = op.size();
  kl = op.n;
  ku = op.n;
  ldab = 2 * kl + ku + 1;
  ab.assign(static_cast<std::size_t>(ldab) * n, 0.0);
  ipiv.assign(n, 0);
  auto put = [&](int i, int j, double v) {
    ab[static_cast<std::size_t>(j) * ldab + (kl + ku + i - j)] = v;
  };
  const int bn = op.n;
  for (int k = 0; k < op.slices; ++k) {
    for (int i = 0; i < bn; ++i) {
      for (int j = 0; j < bn; ++j) {
        const double v = op.diag[k](i, j);
        if (v != 0.0) put(k * bn + i, k * bn + j, v);
      }
      if (k > 0 && op.sub[k] != 0.0) put(k * bn + i, (k - 1) * bn + i, op.sub[k]);
      if (k + 1 < op.slices && op.super[k] != 0.0) put(k * bn + i, (k + 1) * bn + i, op.super[k]);
    }
  }
  int info = 0;
  dgbtrf_(&n, &n, &kl, &ku, ab.data(), &ldab, ipiv.data(), &info);
  ok = (info == 0);
}

Eigen::VectorXd BandedFactor::solve(const Eigen::VectorXd& rhs, bool transposed) const {
  Eigen::VectorXd x = rhs;
  int info = 0;
  const int one = 1;
  const char* trans = transposed ? "T" : "N";
  dgbtrs_(trans, &n, &kl, &ku, &one, ab.data(), &ldab, ipiv.data(), x.data(), &n, &info);
  if (info != 0) throw std::runtime_error("dgbtrs failed");
  return x;
}

SmallSigmaResult smallestSingular(const BlockTridiag& op, int count, int iterations,
                                  std::uint64_t seed) {
  const int nTot = op.size();
  const int q = std::min(nTot, std::max(count + 2, 6));
  BandedFactor fac;
  fac.factorize(op);
  if (!fac.ok) throw std::runtime_error("banded factorization failed (singular operator)");

  auto rng = makeRng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(nTot, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < nTot; ++i) x(i, j) = nd(rng);

  for (int it = 0; it < iterations; ++it) {
    for (int j = 0; j < q; ++j) x.col(j) = fac.solve(fac.solve(x.col(j), true), false);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    x = qr.householderQ() * Eigen::MatrixXd::Identity(nTot, q);
  }
  // Rayleigh-Ritz on D^T D within the subspace for ordered singular pairs.
  Eigen::MatrixXd dx(nTot, q);
  for (int j = 0; j < q; ++j) dx.col(j) = op.apply(x.col(j));
  Eigen::MatrixXd gram = dx.transpose() * dx;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
  SmallSigmaResult out;
  out.vectors = x * es.eigenvectors();
  for (int j = 0; j < q; ++j) out.sigmas.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[j])));
  return out;
}

IndexResult numericIndex(const BlockTridiag& dirichletOp, const BlockTridiag& adjointOp,
                         double relThreshold, int probe) {
  IndexResult r;
  // Operator norm estimate by power iteration on D^T D.
  double nrm = 1.0;
  {
    auto rng = makeRng(999);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(dirichletOp.size());
    for (int i = 0; i < v.size(); ++i) v[i] = nd(rng);
    v.normalize();
    for (int it = 0; it < 12; ++it) {
      v = dirichletOp.applyTranspose(dirichletOp.apply(v));
      nrm = std::sqrt(v.norm());
      v.normalize();
    }
  }
  r.threshold = relThreshold * std::max(1.0, nrm);

  const auto ker = smallestSingular(dirichletOp, probe, 30, 31);
  const auto cok = smallestSingular(adjointOp, probe, 30, 32);
  r.kernelSigmas = ker.sigmas;
  r.cokernelSigmas = cok.sigmas;
  int nk = 0;
  for (double s : ker.sigmas)
    if (s <= r.threshold) ++nk;
  int nc = 0;
  for (double s : cok.sigmas)
    if (s <= r.threshold) ++nc;
  r.kernelDim = nk;
  r.cokernelDim = nc;
  r.index = nk - nc;
  for (double s : ker.sigmas)
    if (s > r.threshold / 10 && s < 10 * r.threshold) r.ambiguous = true;
  for (double s : cok.sigmas)
    if (s > r.threshold / 10 && s < 10 * r.threshold) r.ambiguous = true;
  r.kernelVectors = ker.vectors.leftCols(std::max(0, std::min<int>(nk, ker.vectors.cols())));
  return r;
}

}  // namespace ym
