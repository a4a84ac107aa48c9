#pragma once

#include <memory>
#include <random>

#include "hcsaddle/assembly.hpp"
#include "hcsaddle/mesh.hpp"

namespace hcstest {

using namespace hcsaddle;

inline std::unique_ptr<SaddleProblem> periodic_problem(int M, int k, const EpsilonSpec& eps, std::uint64_t seed = 1) {
  const StructuredMesh mesh = build_mesh(M);
  InclusionLayout layout = assign_epsilon(place_periodic(mesh, k), eps, seed);
  return std::make_unique<SaddleProblem>(mesh, std::move(layout));
}

inline std::unique_ptr<SaddleProblem> random_problem(int M, int k, int removal, const EpsilonSpec& eps,
                                                     std::uint64_t seed) {
  const StructuredMesh mesh = build_mesh(M);
  InclusionLayout layout = assign_epsilon(place_random(mesh, k, removal, seed), eps, seed);
  return std::make_unique<SaddleProblem>(mesh, std::move(layout));
}

/// Test-side random vectors, independent of the library generator.
inline Vector random_vector(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_abs(const Vector& a) {
  double d = 0.0;
  for (double x : a) d = std::max(d, std::abs(x));
  return d;
}

}  // namespace hcstest
