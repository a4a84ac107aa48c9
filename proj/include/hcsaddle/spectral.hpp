#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "hcsaddle/assembly.hpp"
#include "hcsaddle/precond.hpp"

namespace hcsaddle {

inline constexpr int kDenseLimit = 2000;

/// All generalized eigenvalues of op x = mu gram x, ascending. Throws kContract
/// if gram is not SPD and kParameter above the dimension limit.
[[nodiscard]] Eigen::VectorXd dense_spectrum(const Eigen::MatrixXd& op, const Eigen::MatrixXd& gram,
                                             int limit = kDenseLimit);

[[nodiscard]] Eigen::MatrixXd to_dense(const SparseSymMatrix& a);

/// Dense A_eps, assembled column by column from the matrix-free operator.
[[nodiscard]] Eigen::MatrixXd dense_saddle(const SaddleOperator& op);
/// Dense B_D, Q and M over the inclusion space.
[[nodiscard]] Eigen::MatrixXd dense_bd(const InclusionBlocks& blocks);
[[nodiscard]] Eigen::MatrixXd dense_q(const InclusionBlocks& blocks);
[[nodiscard]] Eigen::MatrixXd dense_mass(const InclusionBlocks& blocks);
/// S_0 = B A^{-1} B^T (exact A^{-1}).
[[nodiscard]] Eigen::MatrixXd dense_s0(const SparseSymMatrix& a, const InclusionBlocks& blocks);
/// Dense H_A, from its action on unit vectors (symmetrized).
[[nodiscard]] Eigen::MatrixXd dense_ha(const APreconditioner& ha, int size);
/// diag(H_A^{-1}, B_D + Q)
[[nodiscard]] Eigen::MatrixXd dense_h_inverse(const Eigen::MatrixXd& ha_inverse, const InclusionBlocks& blocks);
/// diag(A, B A^{-1} B^T + Q)
[[nodiscard]] Eigen::MatrixXd dense_h0_inverse(const SparseSymMatrix& a, const InclusionBlocks& blocks);
/// Orthonormal basis (columns) of { w : m_s . w_s = 0 for every s }, block by block.
[[nodiscard]] Eigen::MatrixXd mean_free_basis(const InclusionBlocks& blocks);

/// cond_2 of an SPD sparse matrix via a dense eigensolve.
[[nodiscard]] double condition_number(const SparseSymMatrix& a, int limit = 4000);

using LinearMap = std::function<Vector(std::span<const double>)>;

struct LanczosResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double residual_min = 0.0;  ///< ||T y - theta y||_G for the extreme Ritz pairs
  double residual_max = 0.0;
  int steps = 0;
  bool converged = false;  ///< false: budget exhausted before the bounds met the tolerance
};

/// Lanczos with full reorthogonalization for an operator T that is
/// self-adjoint in the inner product (G x, y).
[[nodiscard]] LanczosResult lanczos_extremes(const LinearMap& op, const LinearMap& gram, std::size_t size,
                                             int budget, double tolerance = 1e-8, std::uint64_t seed = 7);

/// Extreme eigenvalues of H_S S_0 on the mean-free complement of ker B_D,
/// i.e. of the pencil (S_0, B_D) restricted to that complement.
struct A0B0 {
  double a0 = 0.0;
  double b0 = 0.0;
};
[[nodiscard]] A0B0 measure_a0_b0(const SparseSymMatrix& a, const InclusionBlocks& blocks);

/// beta_1 A <= H_A^{-1} <= beta_2 A, measured densely.
struct BetaBounds {
  double beta1 = 1.0;
  double beta2 = 1.0;
};
[[nodiscard]] BetaBounds measure_beta(const SparseSymMatrix& a, const APreconditioner& ha);

struct IntervalConstants {
  double a0 = 0.0;
  double b0 = 0.0;
  double eps_max = 0.0;
  double r_max = 0.0;  ///< eps_max / a0, standing in for (1 + C^2) eps_max
  double mu_hat1 = 0.0;
  double mu_hat2 = 0.0;
  double mu_check1 = 0.0;
  double mu_check2 = 0.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double alpha_min = 1.0;
  double alpha_max = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
};

[[nodiscard]] double mu_hat(int which);
[[nodiscard]] double mu_check(int which, double r_max);
/// Fills mu, r_max and C_1..C_4 from a0, b0, eps_max and beta.
[[nodiscard]] IntervalConstants interval_constants(double a0, double b0, double eps_max, BetaBounds beta);

/// Spectrum of one pencil checked against [lo1, hi1] U [lo2, hi2].
struct PencilCheck {
  std::string name;
  std::vector<double> eigenvalues;
  double lo1 = 0.0;
  double hi1 = 0.0;
  double lo2 = 0.0;
  double hi2 = 0.0;
  int outside = 0;
  double worst_excess = 0.0;
  bool pass = false;
};

[[nodiscard]] PencilCheck check_pencil(std::string name, const Eigen::VectorXd& eigenvalues, double lo1,
                                       double hi1, double lo2, double hi2, double tolerance);

struct SpectrumReport {
  IntervalConstants constants;
  int inclusions = 0;
  double tolerance = 1e-8;
  /// H A_eps (exact-or-configured H_A, H_S = (B_D + Q)^{-1}), full space, against
  /// [mu_check1, mu_hat1] U [1, mu_hat2].
  PencilCheck practical_full;
  /// (A_eps, H_0^{-1}) on the full space against the same set.
  PencilCheck h0_full;
  /// (A_eps, H_0^{-1}) with w restricted to the mean-free complement.
  PencilCheck h0_restricted;
  /// H A_eps restricted to the mean-free complement, against [C1, C2] U [C3, C4].
  PencilCheck practical_restricted;
  /// Max deviation between each full spectrum and (restricted spectrum + m copies of -1).
  double kernel_split_error = 0.0;
  bool kernel_pass = false;

  /// Kernel split holds and both restricted pencils lie in their sets.
  [[nodiscard]] bool verdict() const noexcept {
    return kernel_pass && h0_restricted.pass && practical_restricted.pass;
  }
};

struct SpectrumOptions {
  APreconditionerSpec ha;
  double tolerance = 1e-8;
  int limit = kDenseLimit;
};

/// Dense verification on one instance. The saddle operator is taken from the
/// problem (including any corruption hook); preconditioner blocks are pristine.
[[nodiscard]] SpectrumReport verify_intervals(const SaddleProblem& problem, const SpectrumOptions& options = {});

}  // namespace hcsaddle
