#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "nhrm/common.hpp"
#include "nhrm/kernel.hpp"
#include "nhrm/profile.hpp"

namespace nhrm {

using Matrix4c = Eigen::Matrix4cd;

/// A 4N x 4N matrix whose sixteen N x N blocks are all diagonal, stored as
/// sixteen length-N vectors. Blocks are addressed with 1-based (k, l) so that
/// block(3, 1) is the (3,1) block E_3^* M E_1.
///
/// When the value is an MDE solution, `pt`, `alpha`, `z`, `residual` and
/// `iterations` describe where and how well it was solved.
struct BlockDiag4 {
  int n = 0;
  std::array<ComplexVector, 16> blocks;
  SpectralPoint pt{};
  double alpha = 0.0;
  cplx z = 0.0;
  double residual = 0.0;
  int iterations = 0;
  int newton_steps = 0;

  static BlockDiag4 zero(int n);

  ComplexVector& block(int k, int l) { return blocks[4 * (k - 1) + (l - 1)]; }
  const ComplexVector& block(int k, int l) const { return blocks[4 * (k - 1) + (l - 1)]; }

  /// The 4x4 matrix of (j, j) entries of all blocks.
  Matrix4c at(int j) const;
  void set(int j, const Matrix4c& m);

  /// tr_N of block (k, l).
  cplx block_trace(int k, int l) const { return mean(block(k, l)); }

  /// Largest entry modulus.
  double max_abs() const;
  /// Largest entry modulus of the Hermitian imaginary part (M - M^*)/(2i).
  double max_imag_part() const;

  BlockDiag4& operator+=(const BlockDiag4& o);
  BlockDiag4& operator*=(cplx c);
  friend BlockDiag4 operator-(const BlockDiag4& a, const BlockDiag4& b);

  ComplexVector flatten() const;
  static BlockDiag4 unflatten(const ComplexVector& v, int n);
};

/// The populated channels of the self-energy, in the order (1,1),(4,4),
/// (2,2),(3,3),(1,3),(4,2),(2,4),(3,1); consecutive pairs are coupled.
inline constexpr std::array<std::pair<int, int>, 8> kSelfEnergyChannels{
    {{1, 1}, {4, 4}, {2, 2}, {3, 3}, {1, 3}, {4, 2}, {2, 4}, {3, 1}}};

/// Deterministic block matrix A^zeta (antidiagonal scalar blocks).
Matrix4c a_zeta(const SpectralPoint& pt);

/// Block self-energy: diag blocks (1,1)=S^*[R44], (2,2)=S[R33], (3,3)=S^*[R22],
/// (4,4)=S[R11], and off-diagonal (1,3)=S^*[R42], (2,4)=S[R31], (3,1)=S^*[R24],
/// (4,2)=S[R13]. All other blocks vanish.
BlockDiag4 self_energy(const VarianceProfile& p, const BlockDiag4& r);

/// max over indices and entries of |M^{-1} + z + A + alpha(E24 + E42) + S[M]|.
double mde_residual(const VarianceProfile& p, const BlockDiag4& m);

/// M_0 = -(A^zeta)^{-1}, which solves the MDE at alpha = z = 0.
BlockDiag4 mde_exact_zero(const SpectralPoint& pt, int n);

struct MdeOptions {
  /// Validity region |alpha|, |z| < kappa * delta^2.
  double kappa = 0.05;
  bool enforce_validity = true;
  /// Fixed-point damping theta in M <- (1 - theta) M + theta Phi(M).
  double damping = 0.5;
  double tolerance = 1e-12;
  int max_iterations = 20000;
  /// Switch to Newton steps when the residual has not dropped tenfold over
  /// this many fixed-point iterations.
  int stall_window = 200;
  int max_newton_steps = 40;
};

/// Solves -M^{-1} = z + A^zeta + alpha (E24 + E42) + S[M] by damped fixed-point
/// iteration from `warm` (default M_0), falling back to Newton steps solved
/// with GMRES on the stability operator. Throws NumericalError with the final
/// residual on divergence.
BlockDiag4 mde_solve(const VarianceProfile& p, const SpectralPoint& pt, double alpha, cplx z,
                     const MdeOptions& opts = {}, const BlockDiag4* warm = nullptr);

/// Central difference [tr_N M31(h) - tr_N M31(-h)] / (2h) at z = 0.
cplx mde_dalpha_kernel(const VarianceProfile& p, const SpectralPoint& pt, double h, const MdeOptions& opts = {});

/// R - M S[R] M, the stability operator at M.
BlockDiag4 stability_apply(const VarianceProfile& p, const BlockDiag4& m, const BlockDiag4& r);

/// Per-index conjugation C_L[R] = L R L where L is itself block-diagonal.
BlockDiag4 conjugate(const BlockDiag4& l, const BlockDiag4& r);

/// Diagonal weights V (as a BlockDiag4 with only (k,k) blocks populated) for
/// which C_{M_0} = C_sqrtV C_U C_sqrtV and F = C_sqrtV S C_sqrtV is self-adjoint
/// with eigenmatrices weighted by sqrt(v_l v_r).
BlockDiag4 conjugation_weights(const PerronPair& pp, const SpectralPoint& pt);

/// The unitary U with C_{M_0} = C_sqrtV C_U C_sqrtV (antidiagonal, constant in j).
BlockDiag4 conjugation_unitary(const SpectralPoint& pt, int n);

/// F[R] = C_sqrtV S C_sqrtV [R].
BlockDiag4 f_operator_apply(const VarianceProfile& p, const PerronPair& pp, const SpectralPoint& pt,
                            const BlockDiag4& r);

struct FSpectrum {
  /// All eigenvalues of F on the populated channels, by decreasing modulus.
  std::vector<double> eigenvalues;
  /// +-1/|z2|^2, +-1/|z1|^2, +-1/(|z1||z2|).
  std::vector<double> predicted;
  /// Largest distance from a predicted value to the nearest computed eigenvalue.
  double max_predicted_error = 0.0;
  /// ||F[v] - lambda v|| / ||v|| for the eight predicted eigenmatrices.
  std::vector<double> eigen_residuals;
  double max_eigen_residual = 0.0;
  double max_abs_eigenvalue = 0.0;
};

FSpectrum f_operator_top_spectrum(const VarianceProfile& p, const SpectralPoint& pt);

/// Smallest singular value of 1 - C_{M_0} S on the populated channels
/// (Hilbert-Schmidt norm), i.e. 1/||L_0^{-1}||.
double stability_min_singular_value(const VarianceProfile& p, const SpectralPoint& pt);

struct GapReport {
  double min_abs_eigenvalue = 0.0;
  double threshold = 0.0;
  bool psi = false;
};

/// Hermitization [[0, L], [L^*, 0]] of L = [[0, (X - z2)^*], [X - z1, -alpha]].
ComplexMatrix hermitized_matrix(const ComplexMatrix& x, const SpectralPoint& pt, double alpha);

/// min |spec H| = smallest singular value of L against kappa delta^2 / 2.
GapReport gap_report(const ComplexMatrix& x, const SpectralPoint& pt, double alpha, double kappa = 0.05);

struct LinearizationResult {
  cplx block_trace_over_alpha;
  cplx direct;
  GapReport gap;
  double error() const { return std::abs(block_trace_over_alpha - direct); }
};

/// tr_N of the (3,1) block of H^{-1}, divided by alpha, next to the direct
/// resolvent product and the spectral gap of H.
LinearizationResult linearization_check(const ComplexMatrix& x, const SpectralPoint& pt, double alpha,
                                        double kappa = 0.05);

struct ScdosResult {
  std::vector<double> energies;
  std::vector<double> density;
  std::vector<bool> converged;
  std::vector<double> residual;
};

/// Self-consistent density (1/(4 pi N)) sum_j tr Im m_j(E + i eta) along the grid.
/// Points are solved in order, each warm-started from its predecessor; a point
/// that fails is flagged and the next point restarts from -(z + A + alpha)^{-1}.
ScdosResult scdos_slice(const VarianceProfile& p, const SpectralPoint& pt, double alpha,
                        const std::vector<double>& grid, double eta, const MdeOptions& opts = {});

}  // namespace nhrm
