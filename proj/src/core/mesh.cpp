#include "hcsaddle/mesh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hcsaddle/rng.hpp"

namespace hcsaddle {

StructuredMesh::StructuredMesh(int cells_per_side) : cells_(cells_per_side) {
  if (cells_per_side < 2) {
    throw Error(ErrorCode::kInvalidMesh,
                "mesh needs at least 2 cells per side, got " + std::to_string(cells_per_side));
  }
}

std::array<int, 3> StructuredMesh::triangle(int t) const noexcept {
  const GridNode c = triangle_cell(t);
  const int a = node_id(c.i, c.j);
  const int b = node_id(c.i + 1, c.j);
  const int d = node_id(c.i + 1, c.j + 1);
  const int e = node_id(c.i, c.j + 1);
  if (t % 2 == 0) return {a, b, d};
  return {a, d, e};
}

StructuredMesh build_mesh(int cells_per_side) { return StructuredMesh(cells_per_side); }

int InclusionLayout::total_nodes() const noexcept {
  int n = 0;
  for (const auto& inc : inclusions_) n += static_cast<int>(inc.nodes.size());
  return n;
}

double InclusionLayout::eps_min() const noexcept {
  double e = std::numeric_limits<double>::infinity();
  for (const auto& inc : inclusions_) e = std::min(e, inc.epsilon);
  return e;
}

double InclusionLayout::eps_max() const noexcept {
  double e = 0.0;
  for (const auto& inc : inclusions_) e = std::max(e, inc.epsilon);
  return e;
}

std::string InclusionLayout::manifest_json() const {
  nlohmann::ordered_json j;
  j["M"] = cells_per_side_;
  j["k"] = inclusion_cells_;
  j["m"] = count();
  j["kind"] = kind;
  j["periodic_count"] = periodic_count;
  j["removal_count"] = removal_count;
  j["layout_seed"] = layout_seed;
  j["epsilon_seed"] = epsilon_seed;
  auto corners = nlohmann::json::array();
  auto eps = nlohmann::json::array();
  for (const auto& inc : inclusions_) {
    corners.push_back({inc.corner.i, inc.corner.j});
    eps.push_back(inc.epsilon);
  }
  j["corners"] = std::move(corners);
  j["epsilon"] = std::move(eps);
  return j.dump(2);
}

InclusionLayout make_layout(const StructuredMesh& mesh, int inclusion_cells,
                            const std::vector<GridNode>& corners) {
  const int M = mesh.cells_per_side();
  const int k = inclusion_cells;
  if (k < 1) throw Error(ErrorCode::kLayout, "inclusion side must be at least one cell");

  std::vector<int> owner(mesh.node_count(), -1);
  std::vector<Inclusion> inclusions;
  inclusions.reserve(corners.size());
  for (std::size_t s = 0; s < corners.size(); ++s) {
    const GridNode c = corners[s];
    if (c.i < 1 || c.j < 1 || c.i + k > M - 1 || c.j + k > M - 1) {
      throw Error(ErrorCode::kLayout, "inclusion " + std::to_string(s) +
                                          " touches or crosses the domain boundary");
    }
    Inclusion inc;
    inc.corner = c;
    inc.cells = k;
    inc.side = k * mesh.h();
    inc.nodes.reserve(static_cast<std::size_t>((k + 1) * (k + 1)));
    for (int lj = 0; lj <= k; ++lj) {
      for (int li = 0; li <= k; ++li) {
        const int id = mesh.node_id(c.i + li, c.j + lj);
        if (owner[id] >= 0) {
          throw Error(ErrorCode::kLayout, "inclusions " + std::to_string(owner[id]) + " and " +
                                              std::to_string(s) + " share a node");
        }
        owner[id] = static_cast<int>(s);
        inc.nodes.push_back(id);
      }
    }
    inclusions.push_back(std::move(inc));
  }
  return InclusionLayout(M, k, std::move(inclusions));
}

namespace {

std::vector<GridNode> periodic_corners(const StructuredMesh& mesh, int k) {
  const int M = mesh.cells_per_side();
  if (k < 2 || k % 2 != 0) {
    throw Error(ErrorCode::kLayout,
                "periodic layout needs an even inclusion side (boundary gap d/2 must be on the grid), got k=" +
                    std::to_string(k));
  }
  if (M % (2 * k) != 0) {
    throw Error(ErrorCode::kLayout, "periodic layout needs M divisible by 2k (M=" +
                                        std::to_string(M) + ", k=" + std::to_string(k) + ")");
  }
  const int per_side = M / (2 * k);
  std::vector<GridNode> corners;
  corners.reserve(static_cast<std::size_t>(per_side * per_side));
  for (int b = 0; b < per_side; ++b) {
    for (int a = 0; a < per_side; ++a) {
      corners.push_back({k / 2 + 2 * k * a, k / 2 + 2 * k * b});
    }
  }
  return corners;
}

}  // namespace

InclusionLayout place_periodic(const StructuredMesh& mesh, int inclusion_cells) {
  auto corners = periodic_corners(mesh, inclusion_cells);
  InclusionLayout layout = make_layout(mesh, inclusion_cells, corners);
  layout.periodic_count = layout.count();
  layout.kind = "periodic";
  return layout;
}

InclusionLayout place_random(const StructuredMesh& mesh, int inclusion_cells, int removal_count,
                             std::uint64_t seed) {
  auto corners = periodic_corners(mesh, inclusion_cells);
  const int full = static_cast<int>(corners.size());
  if (removal_count < 0 || removal_count >= full) {
    throw Error(ErrorCode::kLayout, "removal count must lie in [0, " + std::to_string(full) +
                                        "), got " + std::to_string(removal_count));
  }
  // Partial Fisher-Yates: the first removal_count entries of `order` are removed.
  std::vector<int> order(static_cast<std::size_t>(full));
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, 1);
  for (int r = 0; r < removal_count; ++r) {
    const int pick = r + static_cast<int>(rng.below(static_cast<std::uint64_t>(full - r)));
    std::swap(order[r], order[pick]);
  }
  std::vector<bool> removed(static_cast<std::size_t>(full), false);
  for (int r = 0; r < removal_count; ++r) removed[order[r]] = true;

  std::vector<GridNode> kept;
  for (int s = 0; s < full; ++s) {
    if (!removed[s]) kept.push_back(corners[s]);
  }
  InclusionLayout layout = make_layout(mesh, inclusion_cells, kept);
  layout.periodic_count = full;
  layout.removal_count = removal_count;
  layout.layout_seed = seed;
  layout.kind = removal_count == 0 ? "periodic" : "random";
  return layout;
}

InclusionLayout assign_epsilon(InclusionLayout layout, const EpsilonSpec& spec, std::uint64_t seed) {
  const auto in_unit = [](double e) { return e > 0.0 && e <= 1.0; };
  if (spec.mode == EpsilonSpec::Mode::kUniform) {
    if (!in_unit(spec.value)) {
      throw Error(ErrorCode::kParameter, "epsilon must lie in (0, 1], got " + std::to_string(spec.value));
    }
    for (auto& inc : layout.inclusions_) inc.epsilon = spec.value;
  } else {
    if (!in_unit(spec.value) || !in_unit(spec.upper) || spec.value > spec.upper) {
      throw Error(ErrorCode::kParameter, "random epsilon segment [" + std::to_string(spec.value) +
                                             ", " + std::to_string(spec.upper) +
                                             "] must satisfy 0 < min <= max <= 1");
    }
    CounterRng rng(seed, 2);
    for (auto& inc : layout.inclusions_) {
      inc.epsilon = spec.value == spec.upper ? spec.value : rng.uniform(spec.value, spec.upper);
    }
    layout.epsilon_seed = seed;
  }
  return layout;
}

OrderingMap::OrderingMap(const StructuredMesh& mesh, const InclusionLayout& layout)
    : interior_per_side_(mesh.cells_per_side() - 1),
      to_system_(static_cast<std::size_t>(mesh.node_count()), -1) {
  if (layout.count() > 0 && layout.cells_per_side() != mesh.cells_per_side()) {
    throw Error(ErrorCode::kLayout, "layout was built for a different mesh");
  }
  to_grid_.reserve(static_cast<std::size_t>(mesh.interior_count()));
  offsets_.push_back(0);
  for (const auto& inc : layout.inclusions()) {
    for (int id : inc.nodes) {
      to_system_[id] = static_cast<int>(to_grid_.size());
      to_grid_.push_back(id);
    }
    offsets_.push_back(static_cast<int>(to_grid_.size()));
  }
  for (int id = 0; id < mesh.node_count(); ++id) {
    if (mesh.is_boundary(id) || to_system_[id] >= 0) continue;
    to_system_[id] = static_cast<int>(to_grid_.size());
    to_grid_.push_back(id);
  }
}

Vector OrderingMap::permute(std::span<const double> natural) const {
  require_same_size(natural.size(), to_grid_.size(), "OrderingMap::permute");
  const int stride = interior_per_side_ + 2;
  Vector out(natural.size());
  for (std::size_t k = 0; k < to_grid_.size(); ++k) {
    const int id = to_grid_[k];
    const int i = id % stride;
    const int j = id / stride;
    out[k] = natural[static_cast<std::size_t>((j - 1) * interior_per_side_ + (i - 1))];
  }
  return out;
}

Vector OrderingMap::unpermute(std::span<const double> system) const {
  require_same_size(system.size(), to_grid_.size(), "OrderingMap::unpermute");
  const int stride = interior_per_side_ + 2;
  Vector out(system.size());
  for (std::size_t k = 0; k < to_grid_.size(); ++k) {
    const int id = to_grid_[k];
    const int i = id % stride;
    const int j = id / stride;
    out[static_cast<std::size_t>((j - 1) * interior_per_side_ + (i - 1))] = system[k];
  }
  return out;
}

}  // namespace hcsaddle
