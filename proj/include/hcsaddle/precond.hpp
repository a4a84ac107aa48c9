#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>

#include "hcsaddle/assembly.hpp"

namespace hcsaddle {

// ---------------------------------------------------------------------------
// H_S = (B_D + Q)^{-1}, applied through H_S B_D = I - Q~ and H_S Q = Q~ where
// Q~_s p = (1/d_s^2) e_s (m_s . p) is the M_s-orthogonal projector onto
// constants. No factorization is involved.
// ---------------------------------------------------------------------------

/// Operand B_D w, given by its pre-image w (inclusion-space length).
struct BdImage {
  Vector preimage;
};
/// Operand Q z, given by z.
struct QImage {
  Vector preimage;
};
/// Operand eps_s B_s p_s on a single block, given by (s, p_s).
struct SigmaBdImage {
  int block = 0;
  Vector preimage;
};
using HsTerm = std::variant<BdImage, QImage, SigmaBdImage>;

class SchurPreconditioner {
 public:
  explicit SchurPreconditioner(const InclusionBlocks& blocks) : blocks_(&blocks) {}

  [[nodiscard]] int size() const noexcept { return blocks_->total_size(); }
  [[nodiscard]] const InclusionBlocks& blocks() const noexcept { return *blocks_; }

  /// Q~_s p_s for one block.
  [[nodiscard]] Vector apply_projector(int block, std::span<const double> p_s) const;
  /// Q~ p over the whole inclusion space.
  [[nodiscard]] Vector apply_projector(std::span<const double> p) const;

  /// H_S (B_D bd + Q q) = (I - Q~) bd + Q~ q.
  [[nodiscard]] Vector apply(const SchurTerm& term) const;
  [[nodiscard]] Vector apply_composed(const HsTerm& term) const;

 private:
  const InclusionBlocks* blocks_;
};

/// Factorized B_s + Q_s per block; a test oracle for the composed H_S.
class HsReference {
 public:
  explicit HsReference(const InclusionBlocks& blocks);
  ~HsReference();
  HsReference(HsReference&&) noexcept;
  HsReference& operator=(HsReference&&) noexcept;

  /// Solves (B_D + Q) x = y.
  [[nodiscard]] Vector solve(std::span<const double> y) const;
  [[nodiscard]] Vector solve_block(int block, std::span<const double> y_s) const;
  /// (B_D + Q) x
  [[nodiscard]] Vector multiply(std::span<const double> x) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// H_A: SPD approximations of A^{-1}.
// ---------------------------------------------------------------------------

/// Work done by one application, in products with A and base-preconditioner
/// applications. Exact and single-level variants count as one base application.
struct ApplyCost {
  std::int64_t a_products = 0;
  std::int64_t base_applications = 1;
};

class APreconditioner {
 public:
  virtual ~APreconditioner() = default;

  virtual void apply(std::span<const double> r, std::span<double> out) const = 0;
  [[nodiscard]] Vector apply(std::span<const double> r) const {
    Vector out(r.size());
    apply(r, out);
    return out;
  }
  [[nodiscard]] virtual ApplyCost cost() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
  /// False for inner Krylov iterations, whose coefficients depend on r.
  [[nodiscard]] virtual bool is_linear() const { return true; }
};

enum class AKind { kExact, kInnerCg, kDiagonal, kSymmetricGaussSeidel, kMultigrid };

struct APreconditionerSpec {
  AKind kind = AKind::kExact;
  AKind inner_base = AKind::kSymmetricGaussSeidel;
  int inner_steps = 12;
};

[[nodiscard]] std::string to_string(AKind kind);
[[nodiscard]] AKind parse_a_kind(const std::string& text);

[[nodiscard]] std::unique_ptr<APreconditioner> make_exact_a(const SparseSymMatrix& a);
[[nodiscard]] std::unique_ptr<APreconditioner> make_diagonal_a(const SparseSymMatrix& a);
[[nodiscard]] std::unique_ptr<APreconditioner> make_symmetric_gauss_seidel_a(const SparseSymMatrix& a);
/// Geometric V(1,1) cycle with Gauss-Seidel smoothing on the nested structured
/// meshes; coarse operators coincide with the Galerkin products for this split.
[[nodiscard]] std::unique_ptr<APreconditioner> make_multigrid_a(const StructuredMesh& mesh,
                                                                const OrderingMap& ordering);
/// Fixed number of preconditioned CG steps on A x = r from a zero start.
[[nodiscard]] std::unique_ptr<APreconditioner> make_inner_cg_a(const SparseSymMatrix& a,
                                                               std::unique_ptr<APreconditioner> base,
                                                               int steps);

[[nodiscard]] std::unique_ptr<APreconditioner> make_a_preconditioner(const APreconditionerSpec& spec,
                                                                     const SaddleProblem& problem);

/// H = diag(H_A, H_S) acting on saddle-operator images.
class BlockPreconditioner {
 public:
  BlockPreconditioner(const APreconditioner& ha, const SchurPreconditioner& hs) : ha_(&ha), hs_(&hs) {}

  [[nodiscard]] Vector apply(const SaddleImage& image) const;
  [[nodiscard]] const APreconditioner& ha() const noexcept { return *ha_; }
  [[nodiscard]] const SchurPreconditioner& hs() const noexcept { return *hs_; }

 private:
  const APreconditioner* ha_;
  const SchurPreconditioner* hs_;
};

}  // namespace hcsaddle
