#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nhrm/common.hpp"

namespace nhrm {

/// Nonnegative N x N matrix of entry variances s_ij = E|x_ij|^2.
///
/// Construction validates shape, finiteness and nonnegativity and records the
/// spectral radius. Admissible profiles are additionally irreducible and have
/// spectral radius one (see `normalize_profile`).
class VarianceProfile {
public:
  explicit VarianceProfile(RealMatrix s, std::string id = "custom");

  int n() const { return static_cast<int>(s_.rows()); }
  const RealMatrix& s() const { return s_; }
  double rho() const { return rho_; }
  const std::string& id() const { return id_; }

  /// Strong connectivity of the sparsity pattern of S.
  bool irreducible() const;

private:
  RealMatrix s_;
  double rho_;
  std::string id_;
};

/// Positive Perron-Frobenius eigenvectors of S (right) and S^T (left).
/// Normalized so that <v_r> = 1 and <v_l, v_r> = 1 (normalized inner product).
struct PerronPair {
  RealVector v_l;
  RealVector v_r;
  double eigenvalue = 1.0;

  /// <v_l><v_r>/<v_l,v_r>, the prefactor of every leading-order law.
  double weight() const;
};

enum class ProfileKind { constant, row_stochastic_random, two_block, from_file };

ProfileKind parse_profile_kind(const std::string& name);
std::string to_string(ProfileKind kind);

/// Kind-specific parameters. Recognized keys:
///   two-block: within, across, across_reverse, split (fraction of rows in the
///              first block)
///   row-stochastic-random: min_entry (lower bound of the raw uniform draw)
///   from-file: `path` is used instead of `values`
struct ProfileParams {
  std::map<std::string, double> values;
  std::string path;

  double get(const std::string& key, double fallback) const;
};

/// Builds an admissible (irreducible, spectral radius one) profile.
VarianceProfile build_profile(ProfileKind kind, int n, const ProfileParams& params = {},
                              std::uint64_t seed = 0);

/// Parses "kind[:key=value,...]" as accepted on the command line, e.g.
/// "two-block:within=0.3,across=0.1" or "from-file:path=s.csv".
VarianceProfile build_profile(const std::string& spec, int n, std::uint64_t seed = 0);

/// Reads an n x n CSV of nonnegative decimals.
RealMatrix read_profile_csv(const std::string& path);
void write_profile_csv(const VarianceProfile& p, const std::string& path);

/// s / rho(s). Throws on the zero matrix.
VarianceProfile normalize_profile(const VarianceProfile& p);

/// Spectral radius of a nonnegative matrix (dense eigenvalues).
double spectral_radius(const RealMatrix& s);

/// Shifted power iteration on S + I and S^T + I with a dense fallback for
/// n <= 512. Throws NumericalError if neither route meets the residual bound.
PerronPair perron_vectors(const VarianceProfile& p);

/// (S d)_i = sum_k s_ik d_k, the diagonal of S[diag(d)].
ComplexVector apply_S(const VarianceProfile& p, const ComplexVector& d);
/// (S^T d)_i = sum_k s_ki d_k.
ComplexVector apply_S_adjoint(const VarianceProfile& p, const ComplexVector& d);

/// Q[r] = r - (<v_l, r>/<v_l, v_r>) v_r, projection onto the complement of the
/// Perron direction.
ComplexVector project_Q(const PerronPair& pp, const ComplexVector& r);

/// Q as an explicit n x n matrix.
RealMatrix projection_matrix(const PerronPair& pp);

struct GapCheckReport {
  double max_norm = 0.0;
  bool pass = false;
  std::vector<cplx> test_points;
  std::vector<double> norms;
};

/// Operator norm of Q (S - z)^{-1} Q maximized over `points`. Points must lie
/// in |z| >= 1 - 2 epsilon and outside the disk of radius epsilon around 1.
GapCheckReport resolvent_gap_check(const VarianceProfile& p, double epsilon,
                                   const std::vector<cplx>& points, double bound);

/// `count` equispaced points on |z| = radius, dropping those within
/// `exclude` of z = 1.
std::vector<cplx> circle_points(double radius, int count, double exclude);

}  // namespace nhrm
