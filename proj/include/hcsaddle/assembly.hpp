#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hcsaddle/mesh.hpp"
#include "hcsaddle/sparse.hpp"

namespace hcsaddle {

/// Q_s = (1/d_s^2) m_s m_s^T stored through m_s = M_s e_s.
struct RankOneBlock {
  Vector mass_weights;  ///< m_s, integrals of the basis functions over D_s
  double side = 0.0;    ///< d_s

  [[nodiscard]] double side_sq() const noexcept { return side * side; }

  /// y = Q_s x
  void apply(std::span<const double> x, std::span<double> y) const;
};

/// Per-inclusion blocks, in inclusion order, plus the ordering offsets.
struct InclusionBlocks {
  std::vector<SparseSymMatrix> stiffness;  ///< B_s (Neumann)
  std::vector<SparseSymMatrix> mass;       ///< M_s (consistent)
  std::vector<RankOneBlock> rank_one;
  std::vector<double> epsilon;
  std::vector<int> offsets;  ///< size m+1; offsets.back() == n

  [[nodiscard]] int count() const noexcept { return static_cast<int>(rank_one.size()); }
  [[nodiscard]] int total_size() const noexcept { return offsets.empty() ? 0 : offsets.back(); }

  /// y = B_D x (block diagonal over the inclusion space)
  void apply_bd(std::span<const double> x, std::span<double> y) const;
  /// y = Q x
  void apply_q(std::span<const double> x, std::span<double> y) const;
  /// y = M x
  void apply_mass(std::span<const double> x, std::span<double> y) const;
};

/// An inclusion-space vector carried together with its pre-images:
/// value = B_D * bd + Q * q. Every residual the solvers build has this form,
/// which is what lets H_S act in O(n) without a linear solve.
struct SchurTerm {
  Vector value;
  Vector bd;
  Vector q;

  [[nodiscard]] static SchurTerm zeros(std::size_t n) { return {Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0)}; }

  /// this += a * other
  void axpy(double a, const SchurTerm& other);
  void scale(double a);
};

/// Image of the saddle operator: plain u-block, tagged p-block.
struct SaddleImage {
  Vector u;
  SchurTerm p;

  [[nodiscard]] Vector flatten() const;
  void axpy(double a, const SaddleImage& other);
  void scale(double a);
};

[[nodiscard]] SparseSymMatrix assemble_stiffness(const StructuredMesh& mesh, const OrderingMap& ordering);

[[nodiscard]] InclusionBlocks assemble_inclusion_blocks(const StructuredMesh& mesh,
                                                        const InclusionLayout& layout,
                                                        const OrderingMap& ordering);

/// Stiffness of sigma, with sigma = 1 + 1/eps_s on D_s and 1 elsewhere.
[[nodiscard]] SparseSymMatrix assemble_sigma_matrix(const StructuredMesh& mesh,
                                                    const InclusionLayout& layout,
                                                    const OrderingMap& ordering);

using SourceFunction = std::function<double(double x, double y)>;

/// P1 load with one-point (barycentre) quadrature per triangle.
[[nodiscard]] Vector assemble_load(const StructuredMesh& mesh, const OrderingMap& ordering,
                                   const SourceFunction& f);
[[nodiscard]] Vector assemble_load(const StructuredMesh& mesh, const OrderingMap& ordering, double f);

/// p_s = (u|_{D_s} - c_s) / eps_s with c_s fixing the discrete mean (m_s . p_s) = 0.
[[nodiscard]] Vector recover_p_from_u(std::span<const double> u, const InclusionBlocks& blocks);

/// Matrix-free A_eps = [[A, B^T], [B, -Sigma B_D - Q]] with B = [B_D 0].
class SaddleOperator {
 public:
  SaddleOperator(const SparseSymMatrix& stiffness, const InclusionBlocks& blocks);

  [[nodiscard]] int primal_size() const noexcept { return stiffness_->dimension(); }
  [[nodiscard]] int inclusion_size() const noexcept { return blocks_->total_size(); }
  [[nodiscard]] int size() const noexcept { return primal_size() + inclusion_size(); }

  [[nodiscard]] const SparseSymMatrix& stiffness() const noexcept { return *stiffness_; }
  [[nodiscard]] const InclusionBlocks& blocks() const noexcept { return *blocks_; }

  [[nodiscard]] Vector apply(std::span<const double> z) const;
  [[nodiscard]] SaddleImage apply_tagged(std::span<const double> z) const;

  /// B^T w = [B_D w; 0]
  [[nodiscard]] Vector apply_bt(std::span<const double> w) const;
  /// B v = B_D v_D
  [[nodiscard]] Vector apply_b(std::span<const double> v) const;

 private:
  const SparseSymMatrix* stiffness_;
  const InclusionBlocks* blocks_;
};

/// Mesh, layout, ordering and every assembled block of one instance. The
/// saddle operator holds pointers into this object, so it is move-only.
class SaddleProblem {
 public:
  SaddleProblem(StructuredMesh mesh, InclusionLayout layout);
  SaddleProblem(const SaddleProblem&) = delete;
  SaddleProblem& operator=(const SaddleProblem&) = delete;

  [[nodiscard]] const StructuredMesh& mesh() const noexcept { return mesh_; }
  [[nodiscard]] const InclusionLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] const OrderingMap& ordering() const noexcept { return ordering_; }
  [[nodiscard]] const SparseSymMatrix& stiffness() const noexcept { return stiffness_; }
  [[nodiscard]] const InclusionBlocks& blocks() const noexcept { return blocks_; }
  [[nodiscard]] const SaddleOperator& saddle() const noexcept { return saddle_; }

  [[nodiscard]] int primal_size() const noexcept { return stiffness_.dimension(); }
  [[nodiscard]] int inclusion_size() const noexcept { return blocks_.total_size(); }

  /// Regression hook: scale every m_s used by the saddle operator's Q (not the
  /// preconditioner's copy).
  void corrupt_operator_rank_one(double factor);

 private:
  StructuredMesh mesh_;
  InclusionLayout layout_;
  OrderingMap ordering_;
  SparseSymMatrix stiffness_;
  InclusionBlocks blocks_;
  InclusionBlocks operator_blocks_;
  SaddleOperator saddle_;
};

}  // namespace hcsaddle
