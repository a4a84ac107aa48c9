#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hcsaddle/vector_ops.hpp"

namespace hcsaddle {

struct GridNode {
  int i = 0;
  int j = 0;

  friend bool operator==(const GridNode&, const GridNode&) = default;
};

/// Uniform triangulation of the unit square with M cells per side. Every cell is
/// split by its lower-left to upper-right diagonal, which yields the 5-point
/// stiffness stencil for P1 elements.
class StructuredMesh {
 public:
  explicit StructuredMesh(int cells_per_side);

  [[nodiscard]] int cells_per_side() const noexcept { return cells_; }
  [[nodiscard]] double h() const noexcept { return 1.0 / cells_; }
  [[nodiscard]] int nodes_per_side() const noexcept { return cells_ + 1; }
  [[nodiscard]] int node_count() const noexcept { return nodes_per_side() * nodes_per_side(); }
  [[nodiscard]] int interior_count() const noexcept { return (cells_ - 1) * (cells_ - 1); }
  [[nodiscard]] int triangle_count() const noexcept { return 2 * cells_ * cells_; }
  [[nodiscard]] double triangle_area() const noexcept { return 0.5 * h() * h(); }

  [[nodiscard]] int node_id(int i, int j) const noexcept { return j * nodes_per_side() + i; }
  [[nodiscard]] GridNode node(int id) const noexcept {
    return {id % nodes_per_side(), id / nodes_per_side()};
  }
  [[nodiscard]] bool is_boundary(int id) const noexcept {
    const GridNode g = node(id);
    return g.i == 0 || g.j == 0 || g.i == cells_ || g.j == cells_;
  }
  [[nodiscard]] std::array<double, 2> coords(int id) const noexcept {
    const GridNode g = node(id);
    return {g.i * h(), g.j * h()};
  }

  /// Vertices (grid node ids, counter-clockwise) of triangle t. Triangles 2c and
  /// 2c+1 belong to cell c = cj*M + ci.
  [[nodiscard]] std::array<int, 3> triangle(int t) const noexcept;

  /// Lower-left grid corner of the cell that contains triangle t.
  [[nodiscard]] GridNode triangle_cell(int t) const noexcept {
    const int c = t / 2;
    return {c % cells_, c / cells_};
  }

 private:
  int cells_;
};

[[nodiscard]] StructuredMesh build_mesh(int cells_per_side);

/// One square inclusion, aligned with the grid: lower-left corner at grid node
/// `corner`, side of `cells` mesh cells.
struct Inclusion {
  GridNode corner;
  int cells = 0;
  std::vector<int> nodes;  ///< grid ids of the closed square, row-major from the corner
  double side = 0.0;       ///< d_s = |D_s|^{1/2}
  double epsilon = 1.0;

  [[nodiscard]] bool contains_cell(GridNode cell) const noexcept {
    return cell.i >= corner.i && cell.i < corner.i + cells && cell.j >= corner.j &&
           cell.j < corner.j + cells;
  }
};

struct EpsilonSpec {
  enum class Mode { kUniform, kRandom };

  Mode mode = Mode::kUniform;
  double value = 1.0;   ///< uniform epsilon, or the lower end of the random segment
  double upper = 1e-2;  ///< upper end of the random segment

  [[nodiscard]] static EpsilonSpec uniform(double eps) { return {Mode::kUniform, eps, eps}; }
  [[nodiscard]] static EpsilonSpec random(double eps_min, double upper = 1e-2) {
    return {Mode::kRandom, eps_min, upper};
  }
};

class InclusionLayout {
 public:
  InclusionLayout() = default;
  InclusionLayout(int cells_per_side, int inclusion_cells, std::vector<Inclusion> inclusions)
      : cells_per_side_(cells_per_side), inclusion_cells_(inclusion_cells),
        inclusions_(std::move(inclusions)) {}

  [[nodiscard]] int cells_per_side() const noexcept { return cells_per_side_; }
  [[nodiscard]] int inclusion_cells() const noexcept { return inclusion_cells_; }
  [[nodiscard]] int count() const noexcept { return static_cast<int>(inclusions_.size()); }
  [[nodiscard]] const Inclusion& operator[](int s) const { return inclusions_.at(s); }
  [[nodiscard]] const std::vector<Inclusion>& inclusions() const noexcept { return inclusions_; }

  /// n = sum of n_s.
  [[nodiscard]] int total_nodes() const noexcept;
  [[nodiscard]] double eps_min() const noexcept;
  [[nodiscard]] double eps_max() const noexcept;

  // Provenance for manifests.
  int periodic_count = 0;
  int removal_count = 0;
  std::uint64_t layout_seed = 0;
  std::uint64_t epsilon_seed = 0;
  std::string kind = "custom";

  [[nodiscard]] std::string manifest_json() const;

 private:
  friend InclusionLayout assign_epsilon(InclusionLayout, const EpsilonSpec&, std::uint64_t);

  int cells_per_side_ = 0;
  int inclusion_cells_ = 0;
  std::vector<Inclusion> inclusions_;
};

/// Builds a layout from explicit inclusion corners and validates it: every
/// inclusion lies strictly inside the domain and no node is shared between two
/// closures. Epsilons default to 1.
[[nodiscard]] InclusionLayout make_layout(const StructuredMesh& mesh, int inclusion_cells,
                                          const std::vector<GridNode>& corners);

/// Regular lattice with period 2d and boundary margin d/2. Requires k even and
/// M divisible by 2k.
[[nodiscard]] InclusionLayout place_periodic(const StructuredMesh& mesh, int inclusion_cells);

/// Periodic lattice with `removal_count` inclusions removed at random.
[[nodiscard]] InclusionLayout place_random(const StructuredMesh& mesh, int inclusion_cells,
                                           int removal_count, std::uint64_t seed);

[[nodiscard]] InclusionLayout assign_epsilon(InclusionLayout layout, const EpsilonSpec& spec,
                                             std::uint64_t seed);

/// Maps grid nodes to system indices: inclusion nodes first (grouped by
/// inclusion), then the remaining interior nodes in grid order. Boundary nodes
/// have no system index.
class OrderingMap {
 public:
  OrderingMap(const StructuredMesh& mesh, const InclusionLayout& layout);

  [[nodiscard]] int system_size() const noexcept { return static_cast<int>(to_grid_.size()); }
  [[nodiscard]] int inclusion_size() const noexcept { return offsets_.back(); }
  [[nodiscard]] int exterior_size() const noexcept { return system_size() - inclusion_size(); }
  [[nodiscard]] int block_count() const noexcept { return static_cast<int>(offsets_.size()) - 1; }

  /// offsets()[s] is the first system index of inclusion s; offsets().back() == n.
  [[nodiscard]] std::span<const int> offsets() const noexcept { return offsets_; }
  [[nodiscard]] int block_size(int s) const { return offsets_.at(s + 1) - offsets_.at(s); }

  /// System index of a grid node, or -1 for boundary nodes.
  [[nodiscard]] int system_index(int grid_id) const { return to_system_.at(grid_id); }
  [[nodiscard]] int grid_id(int system_index) const { return to_grid_.at(system_index); }

  /// Natural order = interior nodes in grid (row-major) order.
  [[nodiscard]] Vector permute(std::span<const double> natural) const;
  [[nodiscard]] Vector unpermute(std::span<const double> system) const;

 private:
  int interior_per_side_ = 0;
  std::vector<int> to_system_;
  std::vector<int> to_grid_;
  std::vector<int> offsets_;
};

}  // namespace hcsaddle
