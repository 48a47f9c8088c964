#include "nhrm/linalg.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace nhrm {

SchurForm schur(const ComplexMatrix& a) {
  require(a.rows() == a.cols(), "schur: matrix must be square");
  Eigen::ComplexSchur<ComplexMatrix> cs(a, true);
  if (cs.info() != Eigen::Success) throw NumericalError("Schur decomposition did not converge", 0.0);
  return {cs.matrixU(), cs.matrixT()};
}

ComplexMatrix expm(const ComplexMatrix& a) {
  return a.exp();
}

void for_each_triangular_exp(const ComplexMatrix& a_upper, const std::vector<double>& times,
                             const std::function<void(std::size_t, const ComplexMatrix&)>& visit) {
  const auto n = a_upper.rows();
  ComplexMatrix e = ComplexMatrix::Identity(n, n);
  ComplexMatrix step;
  double step_dt = -1.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    require(t >= 0.0 && (k == 0 || t > times[k - 1]), "time grid must be nonnegative and strictly increasing");
    const double dt = t - prev;
    if (dt > 0.0) {
      if (std::abs(dt - step_dt) > 1e-12 * std::max(1.0, dt)) {
        step = ComplexMatrix(a_upper * dt).exp();
        step_dt = dt;
      }
      e = (step.triangularView<Eigen::Upper>() * e).eval();
    }
    prev = t;
    visit(k, e);
  }
}

double spectral_abscissa(const ComplexVector& eigenvalues) {
  return eigenvalues.real().maxCoeff();
}

GaussRule gauss_legendre(int order) {
  require(order >= 1, "gauss_legendre: order must be positive");
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

ComplexMatrix solve_lyapunov(const SchurForm& a, const ComplexMatrix& c) {
  const auto n = a.t.rows();
  require(c.rows() == n && c.cols() == n, "solve_lyapunov: dimension mismatch");
  const ComplexMatrix& t = a.t;
  const ComplexMatrix ct = a.q.adjoint() * c * a.q;
  ComplexMatrix y(n, n);
  // Column j of T Y + Y T^* = C couples only to columns k >= j.
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    ComplexVector rhs = ct.col(j);
    const auto tail = n - 1 - j;
    if (tail > 0) rhs -= y.rightCols(tail) * t.row(j).tail(tail).adjoint();
    ComplexMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    const double pivot = shifted.diagonal().cwiseAbs().minCoeff();
    if (!(pivot > 1e-14 * t.cwiseAbs().maxCoeff()))
      throw NumericalError("solve_lyapunov: eigenvalues symmetric about the imaginary axis", pivot);
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return a.q * y * a.q.adjoint();
}

}  // namespace nhrm
