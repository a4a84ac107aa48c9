#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hcsaddle/assembly.hpp"
#include "hcsaddle/error.hpp"
#include "hcsaddle/precond.hpp"

namespace hcsaddle {

enum class Method { kPu, kPl, kPcgK };

[[nodiscard]] std::string to_string(Method method);
[[nodiscard]] Method parse_method(const std::string& text);

struct SolverConfig {
  Method method = Method::kPl;
  double delta = 1e-6;
  int max_iterations = 1000;
  std::uint64_t seed = 1;
  APreconditionerSpec ha;

  /// Throws kParameter unless 0 < delta < 1 and max_iterations > 0.
  void validate() const;
};

struct SolverReport {
  int iterations = 0;
  /// Stopping norm before the first iteration and after each one.
  std::vector<double> stop_norms;
  std::int64_t a_applications = 0;
  std::int64_t ha_applications = 0;
  double wall_seconds = 0.0;
  bool converged = false;

  [[nodiscard]] std::int64_t cost() const noexcept { return a_applications + ha_applications; }
  [[nodiscard]] double final_ratio() const noexcept;
  /// Largest relative increase stop_norms[k+1]/stop_norms[k] - 1 (0 if none).
  [[nodiscard]] double worst_increase() const noexcept;
};

/// Solver failure that keeps the work done up to the failure.
class SolverError : public Error {
 public:
  SolverError(ErrorCode code, const std::string& message, SolverReport report)
      : Error(code, message), report_(std::move(report)) {}
  [[nodiscard]] const SolverReport& report() const noexcept { return report_; }

 private:
  SolverReport report_;
};

struct SolveResult {
  Vector solution;
  SolverReport report;
};

/// Components uniform on [-1, 1], reproducible from the seed.
[[nodiscard]] Vector random_initial_guess(std::size_t size, std::uint64_t seed);

/// S_eps = Sigma B_D + Q + B H_A B^T with H_A in place of A^{-1}; images are tagged.
class SchurComplement {
 public:
  SchurComplement(const SaddleOperator& op, const APreconditioner& ha) : op_(&op), ha_(&ha) {}

  [[nodiscard]] int size() const noexcept { return op_->inclusion_size(); }
  [[nodiscard]] SchurTerm apply(std::span<const double> p) const;
  /// g = B H_A f
  [[nodiscard]] SchurTerm rhs(std::span<const double> f) const;

 private:
  const SaddleOperator* op_;
  const APreconditioner* ha_;
};

/// sqrt(<Op v, v>); throws kContract for a quadratic form below -1e-12 |v|^2 scale.
class NormEvaluator {
 public:
  NormEvaluator(const SaddleOperator& op, const BlockPreconditioner& h) : op_(&op), h_(&h) {}

  [[nodiscard]] double a_norm(std::span<const double> v) const;
  [[nodiscard]] double s_norm(std::span<const double> p) const;
  /// K_eps = A_eps H A_eps
  [[nodiscard]] double k_norm(std::span<const double> z) const;

 private:
  const SaddleOperator* op_;
  const BlockPreconditioner* h_;
};

/// Preconditioned Uzawa: CG on S_eps p = g with H_S. The primal right side f
/// defines g; for f = 0 the stopping norm is ||p||_S, otherwise sqrt(r . H_S r).
[[nodiscard]] SolveResult pu_solve(const SaddleOperator& op, const SchurPreconditioner& hs,
                                   const APreconditioner& ha, std::span<const double> f,
                                   std::span<const double> p0, const SolverConfig& config);

/// Preconditioned Lanczos with K_eps-orthogonal directions; stops on ||z - z*||_K.
[[nodiscard]] SolveResult pl_solve(const SaddleOperator& op, const BlockPreconditioner& h,
                                   const SaddleImage& rhs, std::span<const double> z0,
                                   const SolverConfig& config);

/// PCG on K_eps z = A_eps H F with preconditioner H; stops on ||z - z*||_K.
[[nodiscard]] SolveResult pcg_k_solve(const SaddleOperator& op, const BlockPreconditioner& h,
                                      const SaddleImage& rhs, std::span<const double> z0,
                                      const SolverConfig& config);

/// PCG on A x = b. For b = 0 the stopping norm is ||x||_A, otherwise sqrt(r . H_A r).
[[nodiscard]] SolveResult cg_basic(const SparseSymMatrix& a, const APreconditioner& ha,
                                   std::span<const double> rhs, std::span<const double> x0, double delta,
                                   int max_iterations);

/// Homogeneous run on a problem with a seeded random initial guess, using the
/// configured method and H_A variant.
[[nodiscard]] SolveResult solve_homogeneous(const SaddleProblem& problem, const SolverConfig& config);

/// Saddle right side [f; 0] in tagged form.
[[nodiscard]] SaddleImage primal_rhs(std::span<const double> f, int inclusion_size);

}  // namespace hcsaddle
