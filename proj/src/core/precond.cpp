#include "hcsaddle/precond.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>

namespace hcsaddle {

// --------------------------------------------------------------------------- H_S

Vector SchurPreconditioner::apply_projector(int block, std::span<const double> p_s) const {
  const RankOneBlock& r1 = blocks_->rank_one.at(block);
  require_same_size(p_s.size(), r1.mass_weights.size(), "apply_projector");
  const double c = dot(r1.mass_weights, p_s) / r1.side_sq();
  return Vector(p_s.size(), c);
}

Vector SchurPreconditioner::apply_projector(std::span<const double> p) const {
  require_same_size(p.size(), static_cast<std::size_t>(size()), "apply_projector");
  Vector out(p.size());
  for (int s = 0; s < blocks_->count(); ++s) {
    const auto off = static_cast<std::size_t>(blocks_->offsets[s]);
    const auto len = static_cast<std::size_t>(blocks_->offsets[s + 1]) - off;
    const RankOneBlock& r1 = blocks_->rank_one[s];
    const double c = dot(r1.mass_weights, p.subspan(off, len)) / r1.side_sq();
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(off), len, c);
  }
  return out;
}

Vector SchurPreconditioner::apply(const SchurTerm& term) const {
  require_same_size(term.bd.size(), static_cast<std::size_t>(size()), "SchurPreconditioner::apply");
  require_same_size(term.q.size(), static_cast<std::size_t>(size()), "SchurPreconditioner::apply");
  Vector out = term.bd;
  for (int s = 0; s < blocks_->count(); ++s) {
    const auto off = static_cast<std::size_t>(blocks_->offsets[s]);
    const auto len = static_cast<std::size_t>(blocks_->offsets[s + 1]) - off;
    const RankOneBlock& r1 = blocks_->rank_one[s];
    const std::span<const double> bd(term.bd.data() + off, len);
    const std::span<const double> q(term.q.data() + off, len);
    const double shift = (dot(r1.mass_weights, q) - dot(r1.mass_weights, bd)) / r1.side_sq();
    for (std::size_t i = off; i < off + len; ++i) out[i] += shift;
  }
  return out;
}

Vector SchurPreconditioner::apply_composed(const HsTerm& term) const {
  struct Visitor {
    const SchurPreconditioner* self;
    Vector operator()(const BdImage& t) const {
      const auto n = static_cast<std::size_t>(self->size());
      return self->apply(SchurTerm{{}, t.preimage, Vector(n, 0.0)});
    }
    Vector operator()(const QImage& t) const { return self->apply_projector(t.preimage); }
    Vector operator()(const SigmaBdImage& t) const {
      const double eps = self->blocks().epsilon.at(t.block);
      Vector out = t.preimage;
      const Vector proj = self->apply_projector(t.block, t.preimage);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps * (out[i] - proj[i]);
      return out;
    }
  };
  return std::visit(Visitor{this}, term);
}

// --------------------------------------------------------------------------- reference

struct HsReference::Impl {
  const InclusionBlocks* blocks = nullptr;
  std::vector<Eigen::MatrixXd> dense;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
};

namespace {

Eigen::MatrixXd dense_block(const InclusionBlocks& blocks, int s) {
  const SparseSymMatrix& b = blocks.stiffness[s];
  const RankOneBlock& r1 = blocks.rank_one[s];
  const int n_s = b.dimension();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_s, n_s);
  for (int r = 0; r < n_s; ++r) {
    for (int k = b.row_ptr()[r]; k < b.row_ptr()[r + 1]; ++k) out(r, b.col_idx()[k]) = b.values()[k];
  }
  const Eigen::Map<const Eigen::VectorXd> m(r1.mass_weights.data(), n_s);
  out += (m * m.transpose()) / r1.side_sq();
  return out;
}

}  // namespace

HsReference::HsReference(const InclusionBlocks& blocks) : impl_(std::make_unique<Impl>()) {
  impl_->blocks = &blocks;
  for (int s = 0; s < blocks.count(); ++s) {
    impl_->dense.push_back(dense_block(blocks, s));
    impl_->factors.emplace_back(impl_->dense.back());
    if (impl_->factors.back().info() != Eigen::Success) {
      throw Error(ErrorCode::kFactorization,
                  "B_s + Q_s is not positive definite for inclusion " + std::to_string(s));
    }
  }
}

HsReference::~HsReference() = default;
HsReference::HsReference(HsReference&&) noexcept = default;
HsReference& HsReference::operator=(HsReference&&) noexcept = default;

Vector HsReference::solve_block(int block, std::span<const double> y_s) const {
  const auto& f = impl_->factors.at(block);
  require_same_size(y_s.size(), static_cast<std::size_t>(f.rows()), "HsReference::solve_block");
  const Eigen::Map<const Eigen::VectorXd> y(y_s.data(), f.rows());
  const Eigen::VectorXd x = f.solve(y);
  return Vector(x.data(), x.data() + x.size());
}

Vector HsReference::solve(std::span<const double> y) const {
  const InclusionBlocks& b = *impl_->blocks;
  require_same_size(y.size(), static_cast<std::size_t>(b.total_size()), "HsReference::solve");
  Vector out(y.size());
  for (int s = 0; s < b.count(); ++s) {
    const auto off = static_cast<std::size_t>(b.offsets[s]);
    const auto len = static_cast<std::size_t>(b.offsets[s + 1]) - off;
    const Vector xs = solve_block(s, y.subspan(off, len));
    std::copy(xs.begin(), xs.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return out;
}

Vector HsReference::multiply(std::span<const double> x) const {
  const InclusionBlocks& b = *impl_->blocks;
  Vector out(x.size());
  Vector q(x.size());
  b.apply_bd(x, out);
  b.apply_q(x, q);
  axpy(1.0, q, out);
  return out;
}

// --------------------------------------------------------------------------- H_A

std::string to_string(AKind kind) {
  switch (kind) {
    case AKind::kExact: return "exact";
    case AKind::kInnerCg: return "inner-cg";
    case AKind::kDiagonal: return "diagonal";
    case AKind::kSymmetricGaussSeidel: return "sgs";
    case AKind::kMultigrid: return "mg";
  }
  return "unknown";
}

AKind parse_a_kind(const std::string& text) {
  for (AKind k : {AKind::kExact, AKind::kInnerCg, AKind::kDiagonal, AKind::kSymmetricGaussSeidel,
                  AKind::kMultigrid}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kParameter, "unknown H_A variant '" + text + "'");
}

namespace {

class ExactA final : public APreconditioner {
 public:
  explicit ExactA(const SparseSymMatrix& a) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(a.nonzeros());
    for (int r = 0; r < a.dimension(); ++r) {
      for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) t.emplace_back(r, a.col_idx()[k], a.values()[k]);
    }
    Eigen::SparseMatrix<double> m(a.dimension(), a.dimension());
    m.setFromTriplets(t.begin(), t.end());
    solver_.compute(m);
    if (solver_.info() != Eigen::Success) {
      throw Error(ErrorCode::kFactorization, "sparse Cholesky of A failed");
    }
  }

  void apply(std::span<const double> r, std::span<double> out) const override {
    require_same_size(r.size(), static_cast<std::size_t>(solver_.rows()), "ExactA::apply");
    require_same_size(out.size(), r.size(), "ExactA::apply");
    const Eigen::Map<const Eigen::VectorXd> rhs(r.data(), static_cast<Eigen::Index>(r.size()));
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = solver_.solve(rhs);
  }
  [[nodiscard]] ApplyCost cost() const override { return {0, 1}; }
  [[nodiscard]] std::string name() const override { return "exact"; }

 private:
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver_;
};

class DiagonalA final : public APreconditioner {
 public:
  explicit DiagonalA(const SparseSymMatrix& a) : inv_diag_(a.diagonal()) {
    for (double& d : inv_diag_) {
      if (!(d > 0.0)) throw Error(ErrorCode::kContract, "A has a non-positive diagonal entry");
      d = 1.0 / d;
    }
  }
  void apply(std::span<const double> r, std::span<double> out) const override {
    require_same_size(r.size(), inv_diag_.size(), "DiagonalA::apply");
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = inv_diag_[i] * r[i];
  }
  [[nodiscard]] ApplyCost cost() const override { return {0, 1}; }
  [[nodiscard]] std::string name() const override { return "diagonal"; }

 private:
  Vector inv_diag_;
};

/// M = (D + L) D^{-1} (D + U); out = M^{-1} r.
class SymmetricGaussSeidelA final : public APreconditioner {
 public:
  explicit SymmetricGaussSeidelA(const SparseSymMatrix& a) : a_(&a), diag_(a.diagonal()) {}

  void apply(std::span<const double> r, std::span<double> out) const override {
    const int n = a_->dimension();
    require_same_size(r.size(), static_cast<std::size_t>(n), "SymmetricGaussSeidelA::apply");
    const auto rp = a_->row_ptr();
    const auto ci = a_->col_idx();
    const auto va = a_->values();
    Vector y(r.begin(), r.end());
    for (int i = 0; i < n; ++i) {
      double s = y[i];
      for (int k = rp[i]; k < rp[i + 1]; ++k) {
        if (ci[k] < i) s -= va[k] * y[ci[k]];
      }
      y[i] = s / diag_[i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = diag_[i] * y[i];
      for (int k = rp[i]; k < rp[i + 1]; ++k) {
        if (ci[k] > i) s -= va[k] * out[ci[k]];
      }
      out[i] = s / diag_[i];
    }
  }
  [[nodiscard]] ApplyCost cost() const override { return {0, 1}; }
  [[nodiscard]] std::string name() const override { return "sgs"; }

 private:
  const SparseSymMatrix* a_;
  Vector diag_;
};

/// Geometric multigrid for the 5-point operator on (M-1)^2 interior nodes.
class MultigridA final : public APreconditioner {
 public:
  MultigridA(const StructuredMesh& mesh, const OrderingMap& ordering) : ordering_(&ordering) {
    int cells = mesh.cells_per_side();
    levels_.push_back(cells);
    while (cells % 2 == 0 && cells / 2 >= 2) {
      cells /= 2;
      levels_.push_back(cells);
    }
    const int nc = (cells - 1) * (cells - 1);
    if (nc > 2500) {
      throw Error(ErrorCode::kParameter, "multigrid needs M = 2^a * c with (c-1)^2 <= 2500, got M=" +
                                             std::to_string(mesh.cells_per_side()));
    }
    Eigen::MatrixXd coarse = Eigen::MatrixXd::Zero(nc, nc);
    const int w = cells - 1;
    for (int j = 0; j < w; ++j) {
      for (int i = 0; i < w; ++i) {
        const int r = j * w + i;
        coarse(r, r) = 4.0;
        if (i > 0) coarse(r, r - 1) = -1.0;
        if (i + 1 < w) coarse(r, r + 1) = -1.0;
        if (j > 0) coarse(r, r - w) = -1.0;
        if (j + 1 < w) coarse(r, r + w) = -1.0;
      }
    }
    coarse_.compute(coarse);
  }

  void apply(std::span<const double> r, std::span<double> out) const override {
    const Vector rhs = ordering_->unpermute(r);
    Vector x(rhs.size(), 0.0);
    vcycle(0, rhs, x);
    const Vector sys = ordering_->permute(x);
    std::copy(sys.begin(), sys.end(), out.begin());
  }
  [[nodiscard]] ApplyCost cost() const override { return {0, 1}; }
  [[nodiscard]] std::string name() const override { return "mg"; }

 private:
  // Grid values with a zero halo are addressed as (i, j) in [0, M].
  static double at(const Vector& v, int w, int i, int j) {
    if (i < 1 || j < 1 || i > w || j > w) return 0.0;
    return v[static_cast<std::size_t>((j - 1) * w + (i - 1))];
  }

  static void gauss_seidel(const Vector& b, Vector& x, int w, bool forward) {
    const int total = w * w;
    for (int t = 0; t < total; ++t) {
      const int k = forward ? t : total - 1 - t;
      const int i = k % w + 1;
      const int j = k / w + 1;
      x[k] = (b[k] + at(x, w, i - 1, j) + at(x, w, i + 1, j) + at(x, w, i, j - 1) + at(x, w, i, j + 1)) / 4.0;
    }
  }

  static Vector residual(const Vector& b, const Vector& x, int w) {
    Vector res(b.size());
    for (int j = 1; j <= w; ++j) {
      for (int i = 1; i <= w; ++i) {
        const double ax = 4.0 * at(x, w, i, j) - at(x, w, i - 1, j) - at(x, w, i + 1, j) -
                          at(x, w, i, j - 1) - at(x, w, i, j + 1);
        res[static_cast<std::size_t>((j - 1) * w + (i - 1))] = b[static_cast<std::size_t>((j - 1) * w + (i - 1))] - ax;
      }
    }
    return res;
  }

  // P1 interpolation stencil on the diagonal split: fine node (i, j) receives
  // weight from coarse nodes listed here, as (coarse i, coarse j, weight).
  template <class F>
  static void for_each_parent(int i, int j, F&& f) {
    const bool io = i % 2 != 0;
    const bool jo = j % 2 != 0;
    if (!io && !jo) {
      f(i / 2, j / 2, 1.0);
    } else if (io && !jo) {
      f((i - 1) / 2, j / 2, 0.5);
      f((i + 1) / 2, j / 2, 0.5);
    } else if (!io && jo) {
      f(i / 2, (j - 1) / 2, 0.5);
      f(i / 2, (j + 1) / 2, 0.5);
    } else {
      f((i - 1) / 2, (j - 1) / 2, 0.5);
      f((i + 1) / 2, (j + 1) / 2, 0.5);
    }
  }

  void vcycle(std::size_t level, const Vector& b, Vector& x) const {
    const int cells = levels_[level];
    const int w = cells - 1;
    if (level + 1 == levels_.size()) {
      const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
      Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) = coarse_.solve(rhs);
      return;
    }
    gauss_seidel(b, x, w, true);
    const Vector res = residual(b, x, w);

    const int wc = cells / 2 - 1;
    Vector bc(static_cast<std::size_t>(wc * wc), 0.0);
    for (int j = 1; j <= w; ++j) {
      for (int i = 1; i <= w; ++i) {
        const double v = res[static_cast<std::size_t>((j - 1) * w + (i - 1))];
        for_each_parent(i, j, [&](int ic, int jc, double wt) {
          if (ic >= 1 && jc >= 1 && ic <= wc && jc <= wc) bc[static_cast<std::size_t>((jc - 1) * wc + (ic - 1))] += wt * v;
        });
      }
    }
    Vector xc(bc.size(), 0.0);
    vcycle(level + 1, bc, xc);
    for (int j = 1; j <= w; ++j) {
      for (int i = 1; i <= w; ++i) {
        double v = 0.0;
        for_each_parent(i, j, [&](int ic, int jc, double wt) { v += wt * at(xc, wc, ic, jc); });
        x[static_cast<std::size_t>((j - 1) * w + (i - 1))] += v;
      }
    }
    gauss_seidel(b, x, w, false);
  }

  const OrderingMap* ordering_;
  std::vector<int> levels_;
  Eigen::LLT<Eigen::MatrixXd> coarse_;
};

class InnerCgA final : public APreconditioner {
 public:
  InnerCgA(const SparseSymMatrix& a, std::unique_ptr<APreconditioner> base, int steps)
      : a_(&a), base_(std::move(base)), steps_(steps) {
    if (steps < 1) throw Error(ErrorCode::kParameter, "inner CG needs at least one step");
  }

  void apply(std::span<const double> rhs, std::span<double> out) const override {
    const std::size_t n = rhs.size();
    std::fill(out.begin(), out.end(), 0.0);
    Vector r(rhs.begin(), rhs.end());
    Vector z = base_->apply(r);
    Vector p = z;
    Vector q(n);
    double rz = dot(r, z);
    for (int k = 0; k < steps_; ++k) {
      if (!(rz > 0.0)) break;
      a_->multiply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      axpy(alpha, p, out);
      axpy(-alpha, q, r);
      if (k + 1 == steps_) break;
      base_->apply(r, z);
      const double rz_next = dot(r, z);
      xpby(z, rz_next / rz, p);
      rz = rz_next;
    }
  }
  [[nodiscard]] ApplyCost cost() const override {
    const ApplyCost b = base_->cost();
    return {steps_ * (1 + b.a_products), steps_ * b.base_applications};
  }
  [[nodiscard]] std::string name() const override {
    return "inner-cg(" + std::to_string(steps_) + "," + base_->name() + ")";
  }
  [[nodiscard]] bool is_linear() const override { return false; }

 private:
  const SparseSymMatrix* a_;
  std::unique_ptr<APreconditioner> base_;
  int steps_;
};

}  // namespace

std::unique_ptr<APreconditioner> make_exact_a(const SparseSymMatrix& a) { return std::make_unique<ExactA>(a); }
std::unique_ptr<APreconditioner> make_diagonal_a(const SparseSymMatrix& a) { return std::make_unique<DiagonalA>(a); }
std::unique_ptr<APreconditioner> make_symmetric_gauss_seidel_a(const SparseSymMatrix& a) {
  return std::make_unique<SymmetricGaussSeidelA>(a);
}
std::unique_ptr<APreconditioner> make_multigrid_a(const StructuredMesh& mesh, const OrderingMap& ordering) {
  return std::make_unique<MultigridA>(mesh, ordering);
}
std::unique_ptr<APreconditioner> make_inner_cg_a(const SparseSymMatrix& a, std::unique_ptr<APreconditioner> base,
                                                 int steps) {
  return std::make_unique<InnerCgA>(a, std::move(base), steps);
}

std::unique_ptr<APreconditioner> make_a_preconditioner(const APreconditionerSpec& spec,
                                                       const SaddleProblem& problem) {
  const auto single = [&](AKind kind) -> std::unique_ptr<APreconditioner> {
    switch (kind) {
      case AKind::kExact: return make_exact_a(problem.stiffness());
      case AKind::kDiagonal: return make_diagonal_a(problem.stiffness());
      case AKind::kSymmetricGaussSeidel: return make_symmetric_gauss_seidel_a(problem.stiffness());
      case AKind::kMultigrid: return make_multigrid_a(problem.mesh(), problem.ordering());
      case AKind::kInnerCg: break;
    }
    throw Error(ErrorCode::kParameter, "inner CG cannot be its own base preconditioner");
  };
  if (spec.kind == AKind::kInnerCg) {
    return make_inner_cg_a(problem.stiffness(), single(spec.inner_base), spec.inner_steps);
  }
  return single(spec.kind);
}

Vector BlockPreconditioner::apply(const SaddleImage& image) const {
  Vector out = ha_->apply(image.u);
  const Vector p = hs_->apply(image.p);
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace hcsaddle
