#include "nhrm/oracles.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace nhrm::oracle {

cplx polynomial_series(const RealMatrix& s, const std::vector<cplx>& a, const std::vector<cplx>& b) {
  const auto n = s.rows();
  std::vector<double> v(n, 1.0), next(n);
  cplx acc = 0.0;
  const std::size_t deg = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < deg; ++k) {
    double avg = 0.0;
    for (double x : v) avg += x;
    acc += a[k] * b[k] * (avg / static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) row += s(i, j) * v[j];
      next[i] = row;
    }
    v.swap(next);
  }
  return acc;
}

namespace {

double bessel_series(double x, int order) {
  const double q = 0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 1000; ++k) {
    term *= q / (static_cast<double>(k) * (k + order));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace

double bessel_i0(double x) { return bessel_series(x, 0); }
double bessel_i1(double x) { return bessel_series(x, 1); }

double semicircle_sqnorm(double t) {
  if (t == 0.0) return 1.0;
  return std::exp(-2.0 * t) * bessel_i1(2.0 * t) / t;
}

double dense_spectral_radius(const RealMatrix& s) {
  Eigen::EigenSolver<RealMatrix> es(s, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace nhrm::oracle
