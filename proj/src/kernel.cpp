#include "nhrm/kernel.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace nhrm {

namespace {

constexpr double kMinRcond = 1e-13;

Eigen::PartialPivLU<ComplexMatrix> checked_lu(const ComplexMatrix& a, const char* what, double* rcond_out) {
  Eigen::PartialPivLU<ComplexMatrix> lu(a);
  const double rc = lu.rcond();
  if (rcond_out) *rcond_out = rc;
  if (!(rc > kMinRcond)) throw NumericalError(std::string(what) + ": singular or ill-conditioned system", rc);
  return lu;
}

cplx functional_trace_once(const VarianceProfile& p, const AnalyticFunction& f, const AnalyticFunction& g,
                           const Contour& c, QuadratureMode mode) {
  const int m = c.nodes;
  std::vector<cplx> fz(m), gw(m), z(m);
  for (int k = 0; k < m; ++k) {
    z[k] = c.node(k);
    fz[k] = f(z[k]);
    gw[k] = g(z[k]);
  }
  // (1/2 pi i) d zeta = zeta d theta / (2 pi) -> weight zeta_k / m on each circle.
  const double inv_m2 = 1.0 / (static_cast<double>(m) * m);
  cplx sum = 0.0;
  if (mode == QuadratureMode::double_loop) {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        sum += z[a] * fz[a] * z[b] * gw[b] * kernel_at_product(p, z[a] * z[b]);
  } else {
    // z_a z_b = r^2 exp(2 pi i (a + b)/m) takes only m distinct values.
    std::vector<cplx> kern(m);
    for (int k = 0; k < m; ++k) kern[k] = kernel_at_product(p, std::polar(c.radius * c.radius, 2.0 * std::numbers::pi * k / m));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) sum += z[a] * fz[a] * z[b] * gw[b] * kern[(a + b) % m];
  }
  return sum * inv_m2;
}

}  // namespace

void Contour::validate() const {
  require(radius > 1.0, "contour radius must exceed 1");
  require(nodes >= 8 && nodes % 2 == 0, "contour node count must be even and at least 8");
}

cplx Contour::node(int k) const {
  return std::polar(radius, 2.0 * std::numbers::pi * k / nodes);
}

AnalyticFunction AnalyticFunction::polynomial(std::vector<cplx> coefficients) {
  require(!coefficients.empty(), "polynomial needs at least one coefficient");
  for (const cplx a : coefficients) require(std::isfinite(a.real()) && std::isfinite(a.imag()), "polynomial coefficient is not finite");
  AnalyticFunction f;
  f.coeffs_ = std::move(coefficients);
  f.name_ = "polynomial(deg " + std::to_string(f.coeffs_.size() - 1) + ")";
  return f;
}

AnalyticFunction AnalyticFunction::monomial(int degree) {
  require(degree >= 0, "monomial degree must be nonnegative");
  std::vector<cplx> c(degree + 1, 0.0);
  c.back() = 1.0;
  auto f = polynomial(std::move(c));
  f.name_ = "z^" + std::to_string(degree);
  return f;
}

AnalyticFunction AnalyticFunction::callable(std::function<cplx(cplx)> fn, std::string name) {
  require(static_cast<bool>(fn), "callable analytic function is empty");
  AnalyticFunction f;
  f.fn_ = std::move(fn);
  f.name_ = std::move(name);
  return f;
}

cplx AnalyticFunction::operator()(cplx z) const {
  if (fn_) return fn_(z);
  cplx acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

ComplexMatrix AnalyticFunction::apply(const ComplexMatrix& a) const {
  require(is_polynomial(), "matrix evaluation requires a polynomial");
  const auto n = a.rows();
  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = (acc * a).eval();
    acc.diagonal().array() += *it;
  }
  return acc;
}

cplx kernel_at_product(const VarianceProfile& p, cplx c, double* rcond) {
  const int n = p.n();
  ComplexMatrix a = -p.s().cast<cplx>();
  a.diagonal().array() += c;
  const auto lu = checked_lu(a, "kernel_value", rcond);
  return mean(lu.solve(ComplexVector::Ones(n)));
}

cplx kernel_value(const VarianceProfile& p, const SpectralPoint& pt, double* rcond) {
  return kernel_at_product(p, pt.product(), rcond);
}

KernelDecomposition kernel_decomposition(const VarianceProfile& p, const PerronPair& pp, const SpectralPoint& pt) {
  require(pp.v_r.size() == p.n(), "kernel_decomposition: Perron pair dimension mismatch");
  const int n = p.n();
  const cplx c = pt.product();
  const double nn = n;
  KernelDecomposition out;
  out.perron_part = pp.v_l.mean() * pp.v_r.mean() / (pp.v_l.dot(pp.v_r) / nn) / (c - 1.0);

  ComplexMatrix a = -p.s().cast<cplx>();
  a.diagonal().array() += c;
  const auto lu = checked_lu(a, "kernel_decomposition", nullptr);
  const ComplexVector q1 = project_Q(pp, ComplexVector::Ones(n));
  out.complement_part = mean(project_Q(pp, lu.solve(q1)));
  return out;
}

cplx functional_trace(const VarianceProfile& p, const AnalyticFunction& f, const AnalyticFunction& g,
                      const Contour& c, const FunctionalOptions& opts) {
  c.validate();
  const cplx full = functional_trace_once(p, f, g, c, opts.mode);
  if (opts.tolerance > 0.0 && c.nodes / 2 >= 8 && (c.nodes / 2) % 2 == 0) {
    const cplx half = functional_trace_once(p, f, g, Contour{c.radius, c.nodes / 2}, opts.mode);
    const double diff = std::abs(full - half);
    if (diff > opts.tolerance * std::max(1.0, std::abs(full)))
      throw NumericalError("functional_trace: quadrature not converged under node doubling", diff);
  }
  return full;
}

cplx empirical_functional_trace(const ComplexMatrix& x, const AnalyticFunction& f, const AnalyticFunction& g,
                                const Contour& c) {
  c.validate();
  require(x.rows() == x.cols(), "empirical_functional_trace: matrix must be square");
  const auto n = x.rows();
  const double spectral = x.eigenvalues().cwiseAbs().maxCoeff();
  if (!(spectral < c.radius))
    throw NumericalError("empirical_functional_trace: eigenvalue of X on or outside the contour", spectral);

  // tr_N of the double sum factorizes into tr_N(F G) with F ~ f(X), G ~ g(X^*).
  // (w - X^*)^{-1} = ((conj w - X)^{-1})^*, and conj of node k is node m - k.
  const int m = c.nodes;
  std::vector<ComplexMatrix> res(m);
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  for (int k = 0; k < m; ++k) {
    const cplx z = c.node(k);
    const auto lu = checked_lu(z * id - x, "empirical_functional_trace", nullptr);
    res[k] = lu.solve(id);
  }
  ComplexMatrix fm = ComplexMatrix::Zero(n, n), gm = ComplexMatrix::Zero(n, n);
  for (int k = 0; k < m; ++k) {
    const cplx z = c.node(k);
    fm += (z * f(z) / static_cast<double>(m)) * res[k];
    gm += (z * g(z) / static_cast<double>(m)) * res[(m - k) % m].adjoint();
  }
  return (fm.cwiseProduct(gm.transpose())).sum() / static_cast<double>(n);
}

cplx empirical_resolvent_product(const ComplexMatrix& x, const SpectralPoint& pt) {
  require(x.rows() == x.cols(), "empirical_resolvent_product: matrix must be square");
  const auto n = x.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const auto lu1 = checked_lu(x - pt.zeta1 * id, "empirical_resolvent_product", nullptr);
  const auto lu2 = checked_lu(x.adjoint() - std::conj(pt.zeta2) * id, "empirical_resolvent_product", nullptr);
  // tr(A^{-1} B^{-1}) = tr(B^{-1} A^{-1}): one solve against I, one against the result.
  const ComplexMatrix a_inv = lu1.solve(id);
  return lu2.solve(a_inv).trace() / static_cast<double>(n);
}

}  // namespace nhrm
