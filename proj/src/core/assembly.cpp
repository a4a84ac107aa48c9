#include "hcsaddle/assembly.hpp"

#include <array>

namespace hcsaddle {

namespace {

struct LocalMatrices {
  std::array<std::array<double, 3>, 3> stiffness{};
  std::array<std::array<double, 3>, 3> mass{};
  double area = 0.0;
};

LocalMatrices local_p1(const StructuredMesh& mesh, const std::array<int, 3>& tri) {
  std::array<std::array<double, 2>, 3> p{};
  for (int a = 0; a < 3; ++a) p[a] = mesh.coords(tri[a]);
  LocalMatrices lm;
  const double det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
  lm.area = 0.5 * det;
  std::array<double, 3> b{};
  std::array<double, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const int a1 = (a + 1) % 3;
    const int a2 = (a + 2) % 3;
    b[a] = p[a1][1] - p[a2][1];
    c[a] = p[a2][0] - p[a1][0];
  }
  for (int a = 0; a < 3; ++a) {
    for (int q = 0; q < 3; ++q) {
      lm.stiffness[a][q] = (b[a] * b[q] + c[a] * c[q]) / (4.0 * lm.area);
      lm.mass[a][q] = lm.area / 12.0 * (a == q ? 2.0 : 1.0);
    }
  }
  return lm;
}

/// Cell (row-major) -> inclusion index or -1.
std::vector<int> cell_owner(const StructuredMesh& mesh, const InclusionLayout& layout) {
  const int M = mesh.cells_per_side();
  std::vector<int> owner(static_cast<std::size_t>(M * M), -1);
  for (int s = 0; s < layout.count(); ++s) {
    const Inclusion& inc = layout[s];
    for (int b = 0; b < inc.cells; ++b) {
      for (int a = 0; a < inc.cells; ++a) owner[(inc.corner.j + b) * M + inc.corner.i + a] = s;
    }
  }
  return owner;
}

SparseSymMatrix assemble_weighted(const StructuredMesh& mesh, const OrderingMap& ordering,
                                  const std::vector<double>& cell_weight) {
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(mesh.triangle_count()) * 9);
  const int M = mesh.cells_per_side();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto tri = mesh.triangle(t);
    const LocalMatrices lm = local_p1(mesh, tri);
    const GridNode cell = mesh.triangle_cell(t);
    const double w = cell_weight.empty() ? 1.0 : cell_weight[cell.j * M + cell.i];
    for (int a = 0; a < 3; ++a) {
      const int row = ordering.system_index(tri[a]);
      if (row < 0) continue;
      for (int q = 0; q < 3; ++q) {
        const int col = ordering.system_index(tri[q]);
        if (col < 0) continue;
        entries.push_back({row, col, w * lm.stiffness[a][q]});
      }
    }
  }
  return SparseSymMatrix::from_triplets(ordering.system_size(), entries);
}

}  // namespace

void RankOneBlock::apply(std::span<const double> x, std::span<double> y) const {
  const double c = dot(mass_weights, x) / side_sq();
  require_same_size(y.size(), mass_weights.size(), "RankOneBlock::apply");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = c * mass_weights[i];
}

void InclusionBlocks::apply_bd(std::span<const double> x, std::span<double> y) const {
  require_same_size(x.size(), static_cast<std::size_t>(total_size()), "apply_bd");
  require_same_size(y.size(), static_cast<std::size_t>(total_size()), "apply_bd");
  for (int s = 0; s < count(); ++s) {
    const auto len = static_cast<std::size_t>(offsets[s + 1] - offsets[s]);
    stiffness[s].multiply(x.subspan(offsets[s], len), y.subspan(offsets[s], len));
  }
}

void InclusionBlocks::apply_q(std::span<const double> x, std::span<double> y) const {
  require_same_size(x.size(), static_cast<std::size_t>(total_size()), "apply_q");
  require_same_size(y.size(), static_cast<std::size_t>(total_size()), "apply_q");
  for (int s = 0; s < count(); ++s) {
    const auto len = static_cast<std::size_t>(offsets[s + 1] - offsets[s]);
    rank_one[s].apply(x.subspan(offsets[s], len), y.subspan(offsets[s], len));
  }
}

void InclusionBlocks::apply_mass(std::span<const double> x, std::span<double> y) const {
  require_same_size(x.size(), static_cast<std::size_t>(total_size()), "apply_mass");
  require_same_size(y.size(), static_cast<std::size_t>(total_size()), "apply_mass");
  for (int s = 0; s < count(); ++s) {
    const auto len = static_cast<std::size_t>(offsets[s + 1] - offsets[s]);
    mass[s].multiply(x.subspan(offsets[s], len), y.subspan(offsets[s], len));
  }
}

void SchurTerm::axpy(double a, const SchurTerm& other) {
  hcsaddle::axpy(a, other.value, value);
  hcsaddle::axpy(a, other.bd, bd);
  hcsaddle::axpy(a, other.q, q);
}

void SchurTerm::scale(double a) {
  hcsaddle::scale(a, value);
  hcsaddle::scale(a, bd);
  hcsaddle::scale(a, q);
}

Vector SaddleImage::flatten() const {
  Vector out;
  out.reserve(u.size() + p.value.size());
  out.insert(out.end(), u.begin(), u.end());
  out.insert(out.end(), p.value.begin(), p.value.end());
  return out;
}

void SaddleImage::axpy(double a, const SaddleImage& other) {
  hcsaddle::axpy(a, other.u, u);
  p.axpy(a, other.p);
}

void SaddleImage::scale(double a) {
  hcsaddle::scale(a, u);
  p.scale(a);
}

SparseSymMatrix assemble_stiffness(const StructuredMesh& mesh, const OrderingMap& ordering) {
  return assemble_weighted(mesh, ordering, {});
}

InclusionBlocks assemble_inclusion_blocks(const StructuredMesh& mesh, const InclusionLayout& layout,
                                          const OrderingMap& ordering) {
  InclusionBlocks blocks;
  blocks.offsets.assign(ordering.offsets().begin(), ordering.offsets().end());
  const int M = mesh.cells_per_side();
  for (int s = 0; s < layout.count(); ++s) {
    const Inclusion& inc = layout[s];
    const int side_nodes = inc.cells + 1;
    const int n_s = side_nodes * side_nodes;
    const auto local = [&](int grid_id) {
      const GridNode g = mesh.node(grid_id);
      return (g.j - inc.corner.j) * side_nodes + (g.i - inc.corner.i);
    };
    std::vector<Triplet> k_entries;
    std::vector<Triplet> m_entries;
    for (int b = 0; b < inc.cells; ++b) {
      for (int a = 0; a < inc.cells; ++a) {
        const int cell = (inc.corner.j + b) * M + inc.corner.i + a;
        for (int t = 2 * cell; t < 2 * cell + 2; ++t) {
          const auto tri = mesh.triangle(t);
          const LocalMatrices lm = local_p1(mesh, tri);
          for (int x = 0; x < 3; ++x) {
            for (int y = 0; y < 3; ++y) {
              k_entries.push_back({local(tri[x]), local(tri[y]), lm.stiffness[x][y]});
              m_entries.push_back({local(tri[x]), local(tri[y]), lm.mass[x][y]});
            }
          }
        }
      }
    }
    SparseSymMatrix mass = SparseSymMatrix::from_triplets(n_s, m_entries);
    RankOneBlock r1;
    r1.mass_weights = mass.multiply(Vector(static_cast<std::size_t>(n_s), 1.0));
    r1.side = inc.side;
    blocks.stiffness.push_back(SparseSymMatrix::from_triplets(n_s, k_entries));
    blocks.mass.push_back(std::move(mass));
    blocks.rank_one.push_back(std::move(r1));
    blocks.epsilon.push_back(inc.epsilon);
  }
  return blocks;
}

SparseSymMatrix assemble_sigma_matrix(const StructuredMesh& mesh, const InclusionLayout& layout,
                                      const OrderingMap& ordering) {
  const std::vector<int> owner = cell_owner(mesh, layout);
  std::vector<double> weight(owner.size(), 1.0);
  for (std::size_t c = 0; c < owner.size(); ++c) {
    if (owner[c] >= 0) weight[c] = 1.0 + 1.0 / layout[owner[c]].epsilon;
  }
  return assemble_weighted(mesh, ordering, weight);
}

Vector assemble_load(const StructuredMesh& mesh, const OrderingMap& ordering, const SourceFunction& f) {
  Vector load(static_cast<std::size_t>(ordering.system_size()), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto tri = mesh.triangle(t);
    double cx = 0.0;
    double cy = 0.0;
    for (int id : tri) {
      const auto p = mesh.coords(id);
      cx += p[0] / 3.0;
      cy += p[1] / 3.0;
    }
    const double share = f(cx, cy) * mesh.triangle_area() / 3.0;
    for (int id : tri) {
      const int row = ordering.system_index(id);
      if (row >= 0) load[row] += share;
    }
  }
  return load;
}

Vector assemble_load(const StructuredMesh& mesh, const OrderingMap& ordering, double f) {
  return assemble_load(mesh, ordering, [f](double, double) { return f; });
}

Vector recover_p_from_u(std::span<const double> u, const InclusionBlocks& blocks) {
  if (u.size() < static_cast<std::size_t>(blocks.total_size())) {
    throw Error(ErrorCode::kDimension, "recover_p_from_u: u shorter than the inclusion space");
  }
  Vector p(static_cast<std::size_t>(blocks.total_size()));
  for (int s = 0; s < blocks.count(); ++s) {
    const auto off = static_cast<std::size_t>(blocks.offsets[s]);
    const auto len = static_cast<std::size_t>(blocks.offsets[s + 1]) - off;
    const RankOneBlock& r1 = blocks.rank_one[s];
    const double mean = dot(r1.mass_weights, u.subspan(off, len)) / r1.side_sq();
    for (std::size_t i = 0; i < len; ++i) p[off + i] = (u[off + i] - mean) / blocks.epsilon[s];
  }
  return p;
}

SaddleOperator::SaddleOperator(const SparseSymMatrix& stiffness, const InclusionBlocks& blocks)
    : stiffness_(&stiffness), blocks_(&blocks) {
  if (blocks.total_size() > stiffness.dimension()) {
    throw Error(ErrorCode::kDimension, "inclusion space larger than the primal space");
  }
}

Vector SaddleOperator::apply_bt(std::span<const double> w) const {
  const auto n = static_cast<std::size_t>(inclusion_size());
  require_same_size(w.size(), n, "SaddleOperator::apply_bt");
  Vector out(static_cast<std::size_t>(primal_size()), 0.0);
  blocks_->apply_bd(w, std::span<double>(out).first(n));
  return out;
}

Vector SaddleOperator::apply_b(std::span<const double> v) const {
  const auto n = static_cast<std::size_t>(inclusion_size());
  require_same_size(v.size(), static_cast<std::size_t>(primal_size()), "SaddleOperator::apply_b");
  Vector out(n);
  blocks_->apply_bd(v.first(n), out);
  return out;
}

SaddleImage SaddleOperator::apply_tagged(std::span<const double> z) const {
  require_same_size(z.size(), static_cast<std::size_t>(size()), "SaddleOperator::apply");
  const auto N = static_cast<std::size_t>(primal_size());
  const auto n = static_cast<std::size_t>(inclusion_size());
  const auto v = z.first(N);
  const auto w = z.subspan(N, n);

  SaddleImage out;
  out.u = stiffness_->multiply(v);
  Vector btw(n);
  blocks_->apply_bd(w, btw);
  for (std::size_t i = 0; i < n; ++i) out.u[i] += btw[i];

  // B v - Sigma B_D w - Q w = B_D (v_D - Sigma w) + Q (-w)
  out.p = SchurTerm::zeros(n);
  for (int s = 0; s < blocks_->count(); ++s) {
    const double eps = blocks_->epsilon[s];
    for (int i = blocks_->offsets[s]; i < blocks_->offsets[s + 1]; ++i) {
      out.p.bd[i] = v[i] - eps * w[i];
      out.p.q[i] = -w[i];
    }
  }
  Vector qpart(n);
  blocks_->apply_bd(out.p.bd, out.p.value);
  blocks_->apply_q(out.p.q, qpart);
  hcsaddle::axpy(1.0, qpart, out.p.value);
  return out;
}

Vector SaddleOperator::apply(std::span<const double> z) const { return apply_tagged(z).flatten(); }

SaddleProblem::SaddleProblem(StructuredMesh mesh, InclusionLayout layout)
    : mesh_(std::move(mesh)),
      layout_(std::move(layout)),
      ordering_(mesh_, layout_),
      stiffness_(assemble_stiffness(mesh_, ordering_)),
      blocks_(assemble_inclusion_blocks(mesh_, layout_, ordering_)),
      operator_blocks_(blocks_),
      saddle_(stiffness_, operator_blocks_) {}

void SaddleProblem::corrupt_operator_rank_one(double factor) {
  for (auto& r1 : operator_blocks_.rank_one) hcsaddle::scale(factor, r1.mass_weights);
}

}  // namespace hcsaddle
