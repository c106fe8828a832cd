#include "ymlab/critical.hpp"

#include <Eigen/Eigenvalues>

namespace ym {

namespace {

int negativeCount(const Eigen::MatrixXd& m, double zeroTol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  int n = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < -zeroTol) ++n;
  return n;
}

double minAbsEig(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

}  // namespace

HellmannFeynmanReport hellmannFeynman(const MatrixFamily& family, double s0, int branches,
                                      double hLambda, double hF, double gapTol) {
  HellmannFeynmanReport rep;
  const Eigen::MatrixXd f0 = family(s0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(0.5 * (f0 + f0.transpose()));
  const Eigen::VectorXd ev = es0.eigenvalues();
  const Eigen::MatrixXd evec = es0.eigenvectors();
  const int n = static_cast<int>(ev.size());
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());

  // Candidate branches: smallest |lambda| among simple eigenvalues.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(ev[a]) < std::abs(ev[b]); });

  const Eigen::MatrixXd fp = family(s0 + hLambda);
  const Eigen::MatrixXd fm = family(s0 - hLambda);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esp(0.5 * (fp + fp.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esm(0.5 * (fm + fm.transpose()));
  const Eigen::MatrixXd fdotp = family(s0 + hF);
  const Eigen::MatrixXd fdotm = family(s0 - hF);
  const Eigen::MatrixXd fdot = (fdotp - fdotm) / (2 * hF);

  auto matchEig = [&](const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                      const Eigen::VectorXd& x, double& lam) {
    const Eigen::VectorXd ov = (es.eigenvectors().transpose() * x).cwiseAbs();
    int best = 0;
    ov.maxCoeff(&best);
    lam = es.eigenvalues()[best];
    return ov[best] > 0.9;
  };

  for (int idx : order) {
    if (rep.branches >= branches) break;
    double gap = 1e300;
    for (int j = 0; j < n; ++j)
      if (j != idx) gap = std::min(gap, std::abs(ev[j] - ev[idx]));
    if (gap < gapTol) continue;
    const Eigen::VectorXd x = evec.col(idx);
    double lp, lm;
    if (!matchEig(esp, x, lp) || !matchEig(esm, x, lm)) {
      rep.collision = true;
      continue;
    }
    const double lamdot = (lp - lm) / (2 * hLambda);
    if (std::abs(lamdot) < 1e-8 * scale) continue;  // flat branch: relative error unstable
    const double hf = x.dot(fdot * x);
    rep.maxRelError = std::max(rep.maxRelError, std::abs(lamdot - hf) / std::abs(lamdot));
    ++rep.branches;
  }
  return rep;
}

SpectralFlowResult spectralFlow(const MatrixFamily& family, double sStart, double sEnd,
                                int samples, double crossingTolS, double kernelTol) {
  SpectralFlowResult out;
  if (samples < 2) samples = 2;
  const double ds = (sEnd - sStart) / (samples - 1);

  std::vector<double> sv(samples);
  std::vector<int> neg(samples);
  double scale = 1.0;
  for (int i = 0; i < samples; ++i) {
    sv[i] = sStart + i * ds;
    const Eigen::MatrixXd m = family(sv[i]);
    if (i == 0) scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    neg[i] = negativeCount(m, 0.0);
  }
  out.negStart = neg.front();
  out.negEnd = neg.back();

  int signatureSum = 0;
  for (int i = 0; i + 1 < samples; ++i) {
    if (neg[i] == neg[i + 1]) {
      // Grazing suspicion: tiny eigenvalue without a parity change.
      const double mn = minAbsEig(family(0.5 * (sv[i] + sv[i + 1])));
      if (mn < 1e-7 * scale) out.regular = false;
      continue;
    }
    // Bisection on the negative count.
    double lo = sv[i], hi = sv[i + 1];
    int nlo = neg[i], nhi = neg[i + 1];
    while (hi - lo > std::max(crossingTolS, 1e-13)) {
      const double mid = 0.5 * (lo + hi);
      const int nm = negativeCount(family(mid), 0.0);
      if (nm != nlo) {
        hi = mid;
        nhi = nm;
      } else {
        lo = mid;
      }
    }
    (void)nhi;
    Crossing c;
    c.s = 0.5 * (lo + hi);

    const Eigen::MatrixXd m = family(c.s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    const Eigen::VectorXd ev = es.eigenvalues();
    c.minAbsEig = ev.cwiseAbs().minCoeff();

    const int jump = std::abs(neg[i + 1] - neg[i]);
    std::vector<int> order(ev.size());
    for (int k = 0; k < ev.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(ev[a]) < std::abs(ev[b]); });
    int kd = jump;
    for (int k = jump; k < static_cast<int>(order.size()); ++k) {
      if (std::abs(ev[order[k]]) <= kernelTol * scale) ++kd;
      else break;
    }
    c.kernelDim = kd;
    Eigen::MatrixXd v(ev.size(), kd);
    for (int k = 0; k < kd; ++k) v.col(k) = es.eigenvectors().col(order[k]);

    double h = 0.25 * std::min(c.s - sv[i], sv[i + 1] - c.s);
    if (h < 1e-9 * std::abs(sEnd - sStart) + 1e-12) h = 0.25 * ds;
    const Eigen::MatrixXd bdot = (family(c.s + h) - family(c.s - h)) / (2 * h);
    const Eigen::MatrixXd gamma = v.transpose() * bdot * v;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(0.5 * (gamma + gamma.transpose()));
    int sig = 0;
    const double gscale = std::max(1e-12, bdot.cwiseAbs().maxCoeff());
    for (int k = 0; k < eg.eigenvalues().size(); ++k) {
      if (eg.eigenvalues()[k] > 1e-8 * gscale) ++sig;
      else if (eg.eigenvalues()[k] < -1e-8 * gscale) --sig;
      else c.regular = false;
    }
    c.signature = sig;
    signatureSum += sig;
    if (!c.regular) out.regular = false;
    out.crossings.push_back(c);
  }

  out.flow = signatureSum;
  out.consistent = (signatureSum == out.negStart - out.negEnd);
  return out;
}

}  // namespace ym
