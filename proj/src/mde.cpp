#include "nhrm/mde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace nhrm {

namespace {

// S d for a real matrix and complex vector without materializing a complex S.
ComplexVector real_times(const RealMatrix& s, const ComplexVector& d) {
  ComplexVector out(d.size());
  out.real() = s * d.real();
  out.imag() = s * d.imag();
  return out;
}

Matrix4c alpha_blocks(double alpha) {
  Matrix4c e = Matrix4c::Zero();
  e(1, 3) = alpha;
  e(3, 1) = alpha;
  return e;
}

void check_point(const SpectralPoint& pt) {
  require(pt.delta() > 0.0, "spectral point must satisfy |zeta1|, |zeta2| > 1");
}

// Restarted GMRES for a linear map on C^d. Returns the relative residual reached.
double gmres(const std::function<ComplexVector(const ComplexVector&)>& op, const ComplexVector& b,
             ComplexVector& x, double rel_tol, int restart, int max_restarts) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    return 0.0;
  }
  if (x.size() != b.size()) x.setZero(b.size());
  double rel = 1.0;
  for (int cycle = 0; cycle < max_restarts; ++cycle) {
    ComplexVector r = b - op(x);
    double beta = r.norm();
    rel = beta / bnorm;
    if (rel <= rel_tol) return rel;
    std::vector<ComplexVector> v;
    v.push_back(r / beta);
    ComplexMatrix h = ComplexMatrix::Zero(restart + 1, restart);
    std::vector<cplx> cs(restart), sn(restart);
    ComplexVector g = ComplexVector::Zero(restart + 1);
    g(0) = beta;
    int k = 0;
    for (; k < restart; ++k) {
      ComplexVector w = op(v[k]);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = v[i].dot(w);
        w -= h(i, k) * v[i];
      }
      h(k + 1, k) = w.norm();
      for (int i = 0; i < k; ++i) {
        const cplx t = std::conj(cs[i]) * h(i, k) + std::conj(sn[i]) * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(std::abs(h(k, k)), std::abs(h(k + 1, k)));
      cs[k] = h(k, k) / denom;
      sn[k] = h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g(k + 1) = -sn[k] * g(k);
      g(k) = std::conj(cs[k]) * g(k);
      rel = std::abs(g(k + 1)) / bnorm;
      const bool breakdown = std::abs(h(k + 1, k)) == 0.0 && w.norm() == 0.0;
      if (rel <= rel_tol || breakdown || k + 1 == restart) {
        ++k;
        break;
      }
      v.push_back(w / w.norm());
    }
    const ComplexVector y =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) x += y(i) * v[i];
    if (rel <= rel_tol) return rel;
  }
  return rel;
}

}  // namespace

BlockDiag4 BlockDiag4::zero(int n) {
  BlockDiag4 b;
  b.n = n;
  for (auto& v : b.blocks) v = ComplexVector::Zero(n);
  return b;
}

Matrix4c BlockDiag4::at(int j) const {
  Matrix4c m;
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) m(k, l) = blocks[4 * k + l](j);
  return m;
}

void BlockDiag4::set(int j, const Matrix4c& m) {
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) blocks[4 * k + l](j) = m(k, l);
}

double BlockDiag4::max_abs() const {
  double out = 0.0;
  for (const auto& v : blocks)
    if (v.size()) out = std::max(out, v.cwiseAbs().maxCoeff());
  return out;
}

double BlockDiag4::max_imag_part() const {
  double out = 0.0;
  for (int k = 1; k <= 4; ++k)
    for (int l = 1; l <= 4; ++l) {
      const ComplexVector im = (block(k, l) - block(l, k).conjugate()) / cplx(0.0, 2.0);
      out = std::max(out, im.cwiseAbs().maxCoeff());
    }
  return out;
}

BlockDiag4& BlockDiag4::operator+=(const BlockDiag4& o) {
  for (int i = 0; i < 16; ++i) blocks[i] += o.blocks[i];
  return *this;
}

BlockDiag4& BlockDiag4::operator*=(cplx c) {
  for (auto& v : blocks) v *= c;
  return *this;
}

BlockDiag4 operator-(const BlockDiag4& a, const BlockDiag4& b) {
  BlockDiag4 out = a;
  for (int i = 0; i < 16; ++i) out.blocks[i] -= b.blocks[i];
  return out;
}

ComplexVector BlockDiag4::flatten() const {
  ComplexVector v(16 * n);
  for (int i = 0; i < 16; ++i) v.segment(i * n, n) = blocks[i];
  return v;
}

BlockDiag4 BlockDiag4::unflatten(const ComplexVector& v, int n) {
  require(v.size() == 16 * n, "BlockDiag4::unflatten: size mismatch");
  BlockDiag4 b;
  b.n = n;
  for (int i = 0; i < 16; ++i) b.blocks[i] = v.segment(i * n, n);
  return b;
}

Matrix4c a_zeta(const SpectralPoint& pt) {
  Matrix4c a = Matrix4c::Zero();
  a(0, 3) = std::conj(pt.zeta2);
  a(1, 2) = pt.zeta1;
  a(2, 1) = std::conj(pt.zeta1);
  a(3, 0) = pt.zeta2;
  return a;
}

BlockDiag4 self_energy(const VarianceProfile& p, const BlockDiag4& r) {
  require(r.n == p.n(), "self_energy: dimension mismatch");
  const RealMatrix& s = p.s();
  const RealMatrix st = s.transpose();
  BlockDiag4 out = BlockDiag4::zero(r.n);
  out.block(1, 1) = real_times(st, r.block(4, 4));
  out.block(2, 2) = real_times(s, r.block(3, 3));
  out.block(3, 3) = real_times(st, r.block(2, 2));
  out.block(4, 4) = real_times(s, r.block(1, 1));
  out.block(1, 3) = real_times(st, r.block(4, 2));
  out.block(2, 4) = real_times(s, r.block(3, 1));
  out.block(3, 1) = real_times(st, r.block(2, 4));
  out.block(4, 2) = real_times(s, r.block(1, 3));
  return out;
}

double mde_residual(const VarianceProfile& p, const BlockDiag4& m) {
  const Matrix4c base = m.z * Matrix4c::Identity() + a_zeta(m.pt) + alpha_blocks(m.alpha);
  const BlockDiag4 se = self_energy(p, m);
  double res = 0.0;
  for (int j = 0; j < m.n; ++j) {
    const Matrix4c f = m.at(j).partialPivLu().inverse() + base + se.at(j);
    res = std::max(res, f.cwiseAbs().maxCoeff());
  }
  return res;
}

BlockDiag4 mde_exact_zero(const SpectralPoint& pt, int n) {
  check_point(pt);
  require(n >= 1, "mde_exact_zero: n must be positive");
  BlockDiag4 m = BlockDiag4::zero(n);
  m.pt = pt;
  m.block(1, 4).setConstant(-1.0 / pt.zeta2);
  m.block(4, 1).setConstant(-1.0 / std::conj(pt.zeta2));
  m.block(2, 3).setConstant(-1.0 / std::conj(pt.zeta1));
  m.block(3, 2).setConstant(-1.0 / pt.zeta1);
  return m;
}

BlockDiag4 mde_solve(const VarianceProfile& p, const SpectralPoint& pt, double alpha, cplx z, const MdeOptions& opts,
                     const BlockDiag4* warm) {
  check_point(pt);
  const int n = p.n();
  if (opts.enforce_validity) {
    const double bound = opts.kappa * pt.delta() * pt.delta();
    if (!(std::abs(alpha) < bound && std::abs(z) < bound))
      throw InvalidArgument("mde_solve: (alpha, z) outside the validity region |alpha|, |z| < kappa delta^2");
  }
  require(opts.damping > 0.0 && opts.damping <= 1.0, "mde_solve: damping must lie in (0, 1]");

  BlockDiag4 m = warm ? *warm : mde_exact_zero(pt, n);
  require(m.n == n, "mde_solve: warm start dimension mismatch");
  m.pt = pt;
  m.alpha = alpha;
  m.z = z;
  const Matrix4c base = z * Matrix4c::Identity() + a_zeta(pt) + alpha_blocks(alpha);

  // One sweep: Phi(M) = -(base + S[M])^{-1} and the residual M^{-1} + base + S[M].
  BlockDiag4 phi = BlockDiag4::zero(n);
  BlockDiag4 fres = BlockDiag4::zero(n);
  auto sweep = [&](const BlockDiag4& cur) {
    const BlockDiag4 se = self_energy(p, cur);
    double res = 0.0;
    for (int j = 0; j < n; ++j) {
      const Matrix4c b = base + se.at(j);
      phi.set(j, -b.partialPivLu().inverse());
      const Matrix4c f = cur.at(j).partialPivLu().inverse() + b;
      fres.set(j, f);
      res = std::max(res, f.cwiseAbs().maxCoeff());
    }
    return std::isfinite(res) ? res : std::numeric_limits<double>::infinity();
  };

  std::vector<double> history;
  bool newton = false;
  int it = 0;
  double res = sweep(m);
  for (; it < opts.max_iterations; ++it) {
    if (res <= opts.tolerance) break;
    history.push_back(res);
    const auto w = static_cast<std::size_t>(opts.stall_window);
    if (history.size() > w && res > 0.1 * history[history.size() - 1 - w]) {
      newton = true;
      break;
    }
    for (int i = 0; i < 16; ++i) m.blocks[i] = (1.0 - opts.damping) * m.blocks[i] + opts.damping * phi.blocks[i];
    res = sweep(m);
  }
  m.iterations = it;

  if (newton || res > opts.tolerance) {
    // Newton: (1 - M S[.] M) D = M F M with F the MDE residual at M.
    for (int k = 0; k < opts.max_newton_steps && res > opts.tolerance; ++k) {
      BlockDiag4 rhs = BlockDiag4::zero(n);
      for (int j = 0; j < n; ++j) {
        const Matrix4c mj = m.at(j);
        rhs.set(j, mj * fres.at(j) * mj);
      }
      ComplexVector d;
      auto op = [&](const ComplexVector& v) { return stability_apply(p, m, BlockDiag4::unflatten(v, n)).flatten(); };
      gmres(op, rhs.flatten(), d, 1e-14, 60, 20);
      m += BlockDiag4::unflatten(d, n);
      res = sweep(m);
      ++m.newton_steps;
    }
  }
  m.residual = res;
  if (!(res <= opts.tolerance))
    throw NumericalError("mde_solve: iteration did not reach the residual tolerance", res);
  return m;
}

cplx mde_dalpha_kernel(const VarianceProfile& p, const SpectralPoint& pt, double h, const MdeOptions& opts) {
  require(h > 0.0, "mde_dalpha_kernel: step must be positive");
  const BlockDiag4 plus = mde_solve(p, pt, h, 0.0, opts);
  const BlockDiag4 minus = mde_solve(p, pt, -h, 0.0, opts);
  return (plus.block_trace(3, 1) - minus.block_trace(3, 1)) / (2.0 * h);
}

BlockDiag4 stability_apply(const VarianceProfile& p, const BlockDiag4& m, const BlockDiag4& r) {
  require(m.n == r.n, "stability_apply: dimension mismatch");
  const BlockDiag4 se = self_energy(p, r);
  BlockDiag4 out = r;
  for (int j = 0; j < r.n; ++j) {
    const Matrix4c mj = m.at(j);
    out.set(j, r.at(j) - mj * se.at(j) * mj);
  }
  return out;
}

BlockDiag4 conjugate(const BlockDiag4& l, const BlockDiag4& r) {
  require(l.n == r.n, "conjugate: dimension mismatch");
  BlockDiag4 out = BlockDiag4::zero(r.n);
  for (int j = 0; j < r.n; ++j) {
    const Matrix4c lj = l.at(j);
    out.set(j, lj * r.at(j) * lj);
  }
  return out;
}

BlockDiag4 conjugation_weights(const PerronPair& pp, const SpectralPoint& pt) {
  const int n = static_cast<int>(pp.v_r.size());
  const double a1 = std::abs(pt.zeta1), a2 = std::abs(pt.zeta2);
  const RealVector rl = (pp.v_r.array() / pp.v_l.array()).sqrt();
  const RealVector lr = rl.cwiseInverse();
  BlockDiag4 v = BlockDiag4::zero(n);
  v.block(1, 1) = (rl / a2).cast<cplx>();
  v.block(2, 2) = (lr / a1).cast<cplx>();
  v.block(3, 3) = (rl / a1).cast<cplx>();
  v.block(4, 4) = (lr / a2).cast<cplx>();
  return v;
}

BlockDiag4 conjugation_unitary(const SpectralPoint& pt, int n) {
  const double a1 = std::abs(pt.zeta1), a2 = std::abs(pt.zeta2);
  BlockDiag4 u = BlockDiag4::zero(n);
  u.block(1, 4).setConstant(std::conj(pt.zeta2) / a2);
  u.block(2, 3).setConstant(pt.zeta1 / a1);
  u.block(3, 2).setConstant(std::conj(pt.zeta1) / a1);
  u.block(4, 1).setConstant(pt.zeta2 / a2);
  return u;
}

BlockDiag4 f_operator_apply(const VarianceProfile& p, const PerronPair& pp, const SpectralPoint& pt,
                            const BlockDiag4& r) {
  BlockDiag4 sqrt_v = conjugation_weights(pp, pt);
  for (auto& b : sqrt_v.blocks) b = b.cwiseSqrt();
  return conjugate(sqrt_v, self_energy(p, conjugate(sqrt_v, r)));
}

FSpectrum f_operator_top_spectrum(const VarianceProfile& p, const SpectralPoint& pt) {
  check_point(pt);
  const PerronPair pp = perron_vectors(p);
  const int n = p.n();
  const int dim = 8 * n;

  // Column c*n + i is F applied to the unit vector at index i of channel c.
  RealMatrix f(dim, dim);
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < n; ++i) {
      BlockDiag4 e = BlockDiag4::zero(n);
      e.block(kSelfEnergyChannels[c].first, kSelfEnergyChannels[c].second)(i) = 1.0;
      const BlockDiag4 fe = f_operator_apply(p, pp, pt, e);
      for (int c2 = 0; c2 < 8; ++c2)
        f.block(c2 * n, c * n + i, n, 1) =
            fe.block(kSelfEnergyChannels[c2].first, kSelfEnergyChannels[c2].second).real();
    }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (f + f.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("f_operator_top_spectrum: eigensolver failed", 0.0);

  FSpectrum out;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + dim);
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  out.max_abs_eigenvalue = std::abs(out.eigenvalues.front());

  const double a1 = std::abs(pt.zeta1), a2 = std::abs(pt.zeta2);
  for (double v : {1.0 / (a2 * a2), 1.0 / (a1 * a1), 1.0 / (a1 * a2)}) {
    out.predicted.push_back(v);
    out.predicted.push_back(-v);
  }
  for (double v : out.predicted) {
    double best = std::numeric_limits<double>::infinity();
    for (double e : out.eigenvalues) best = std::min(best, std::abs(e - v));
    out.max_predicted_error = std::max(out.max_predicted_error, best);
  }

  // Eigenmatrices E_kk'[w] +- E_ll'[w] with w = sqrt(v_l v_r).
  const ComplexVector w = (pp.v_l.array() * pp.v_r.array()).sqrt().matrix().cast<cplx>();
  const double lambdas[4] = {1.0 / (a2 * a2), 1.0 / (a1 * a1), 1.0 / (a1 * a2), 1.0 / (a1 * a2)};
  for (int pair = 0; pair < 4; ++pair)
    for (double sign : {1.0, -1.0}) {
      BlockDiag4 v = BlockDiag4::zero(n);
      const auto [k1, l1] = kSelfEnergyChannels[2 * pair];
      const auto [k2, l2] = kSelfEnergyChannels[2 * pair + 1];
      v.block(k1, l1) = w;
      v.block(k2, l2) = sign * w;
      BlockDiag4 diff = f_operator_apply(p, pp, pt, v);
      v *= sign * lambdas[pair];
      diff = diff - v;
      const double r = diff.flatten().norm() / (std::sqrt(2.0) * w.norm());
      out.eigen_residuals.push_back(r);
      out.max_eigen_residual = std::max(out.max_eigen_residual, r);
    }
  return out;
}

double stability_min_singular_value(const VarianceProfile& p, const SpectralPoint& pt) {
  check_point(pt);
  const int n = p.n();
  const int dim = 8 * n;
  const BlockDiag4 m0 = mde_exact_zero(pt, n);
  ComplexMatrix l(dim, dim);
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < n; ++i) {
      BlockDiag4 e = BlockDiag4::zero(n);
      e.block(kSelfEnergyChannels[c].first, kSelfEnergyChannels[c].second)(i) = 1.0;
      const BlockDiag4 le = stability_apply(p, m0, e);
      for (int c2 = 0; c2 < 8; ++c2)
        l.block(c2 * n, c * n + i, n, 1) = le.block(kSelfEnergyChannels[c2].first, kSelfEnergyChannels[c2].second);
    }
  Eigen::JacobiSVD<ComplexMatrix> svd(l);
  return svd.singularValues()(dim - 1);
}

ComplexMatrix hermitized_matrix(const ComplexMatrix& x, const SpectralPoint& pt, double alpha) {
  require(x.rows() == x.cols(), "hermitized_matrix: X must be square");
  const auto n = x.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix x1 = x - pt.zeta1 * id;
  const ComplexMatrix x2 = x - pt.zeta2 * id;
  ComplexMatrix h = ComplexMatrix::Zero(4 * n, 4 * n);
  h.block(0, 3 * n, n, n) = x2.adjoint();
  h.block(n, 2 * n, n, n) = x1;
  h.block(n, 3 * n, n, n) = -alpha * id;
  h.block(2 * n, n, n, n) = x1.adjoint();
  h.block(3 * n, 0, n, n) = x2;
  h.block(3 * n, n, n, n) = -alpha * id;
  return h;
}

GapReport gap_report(const ComplexMatrix& x, const SpectralPoint& pt, double alpha, double kappa) {
  check_point(pt);
  const auto n = x.rows();
  const ComplexMatrix h = hermitized_matrix(x, pt, alpha);
  // spec H = +-(singular values of L), L the upper-right 2N x 2N block.
  const ComplexMatrix l = h.block(0, 2 * n, 2 * n, 2 * n);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(l.adjoint() * l, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("gap_report: eigensolver failed", 0.0);
  GapReport g;
  g.min_abs_eigenvalue = std::sqrt(std::max(0.0, es.eigenvalues()(0)));
  g.threshold = kappa * pt.delta() * pt.delta() / 2.0;
  g.psi = g.min_abs_eigenvalue >= g.threshold;
  return g;
}

LinearizationResult linearization_check(const ComplexMatrix& x, const SpectralPoint& pt, double alpha,
                                        double kappa) {
  check_point(pt);
  require(alpha != 0.0, "linearization_check: alpha must be nonzero");
  const auto n = x.rows();
  LinearizationResult out;
  out.gap = gap_report(x, pt, alpha, kappa);
  const ComplexMatrix h = hermitized_matrix(x, pt, alpha);
  Eigen::PartialPivLU<ComplexMatrix> lu(h);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-13)) throw NumericalError("linearization_check: H is numerically singular", rcond);
  ComplexMatrix e1 = ComplexMatrix::Zero(4 * n, n);
  e1.topRows(n).setIdentity();
  const ComplexMatrix g_e1 = lu.solve(e1);
  out.block_trace_over_alpha = g_e1.block(2 * n, 0, n, n).trace() / static_cast<double>(n) / alpha;
  out.direct = empirical_resolvent_product(x, pt);
  return out;
}

ScdosResult scdos_slice(const VarianceProfile& p, const SpectralPoint& pt, double alpha,
                        const std::vector<double>& grid, double eta, const MdeOptions& opts) {
  check_point(pt);
  require(eta > 0.0, "scdos_slice: eta must be positive");
  const int n = p.n();
  MdeOptions o = opts;
  o.enforce_validity = false;

  ScdosResult out;
  out.energies = grid;
  bool have_prev = false;
  BlockDiag4 prev;
  for (const double e : grid) {
    const cplx z(e, eta);
    BlockDiag4 start;
    if (have_prev) {
      start = prev;
    } else {
      const Matrix4c m = -(z * Matrix4c::Identity() + a_zeta(pt) + alpha_blocks(alpha)).inverse();
      start = BlockDiag4::zero(n);
      for (int j = 0; j < n; ++j) start.set(j, m);
    }
    try {
      const BlockDiag4 m = mde_solve(p, pt, alpha, z, o, &start);
      double acc = 0.0;
      for (int k = 1; k <= 4; ++k) acc += m.block(k, k).imag().sum();
      out.density.push_back(acc / (4.0 * std::numbers::pi * n));
      out.converged.push_back(true);
      out.residual.push_back(m.residual);
      prev = m;
      have_prev = true;
    } catch (const NumericalError& err) {
      out.density.push_back(std::numeric_limits<double>::quiet_NaN());
      out.converged.push_back(false);
      out.residual.push_back(err.value());
      have_prev = false;
    }
  }
  return out;
}

}  // namespace nhrm
