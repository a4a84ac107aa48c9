#include "hcsaddle/hcsaddle.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

#include "hcsaddle/solvers.hpp"
#include "hcsaddle/spectral.hpp"

#ifndef HCSADDLE_VERSION
#define HCSADDLE_VERSION "0.0.0"
#endif

struct hcs_problem {
  hcs_problem_desc desc;
  std::unique_ptr<hcsaddle::SaddleProblem> problem;
};

namespace {

using namespace hcsaddle;

thread_local std::string g_last_error;

hcs_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidMesh: return HCS_ERR_INVALID_MESH;
    case ErrorCode::kLayout: return HCS_ERR_LAYOUT;
    case ErrorCode::kParameter: return HCS_ERR_PARAMETER;
    case ErrorCode::kDimension: return HCS_ERR_DIMENSION;
    case ErrorCode::kBreakdown: return HCS_ERR_BREAKDOWN;
    case ErrorCode::kMaxIterations: return HCS_ERR_MAX_ITERATIONS;
    case ErrorCode::kContract: return HCS_ERR_CONTRACT;
    case ErrorCode::kFactorization: return HCS_ERR_FACTORIZATION;
    case ErrorCode::kVerification: return HCS_ERR_VERIFICATION;
    case ErrorCode::kIo: return HCS_ERR_IO;
  }
  return HCS_ERR_INTERNAL;
}

struct UnknownEnum : std::runtime_error {
  using std::runtime_error::runtime_error;
};

hcs_status fail(hcs_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
hcs_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const UnknownEnum& e) {
    return fail(HCS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(HCS_ERR_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return fail(HCS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HCS_ERR_INTERNAL, "unknown exception");
  }
}

#define HCS_REQUIRE(cond, what) \
  if (!(cond)) return fail(HCS_ERR_INVALID_ARGUMENT, what)

AKind to_a_kind(int32_t kind) {
  switch (kind) {
    case HCS_HA_EXACT: return AKind::kExact;
    case HCS_HA_INNER_CG: return AKind::kInnerCg;
    case HCS_HA_DIAGONAL: return AKind::kDiagonal;
    case HCS_HA_SGS: return AKind::kSymmetricGaussSeidel;
    case HCS_HA_MULTIGRID: return AKind::kMultigrid;
    default: break;
  }
  throw UnknownEnum("unknown H_A kind " + std::to_string(kind));
}

Method to_method(int32_t method) {
  switch (method) {
    case HCS_METHOD_PU: return Method::kPu;
    case HCS_METHOD_PL: return Method::kPl;
    case HCS_METHOD_PCG_K: return Method::kPcgK;
    default: break;
  }
  throw UnknownEnum("unknown method " + std::to_string(method));
}

std::unique_ptr<SaddleProblem> build(const hcs_problem_desc& d) {
  StructuredMesh mesh(d.cells_per_side);
  InclusionLayout base;
  if (d.layout == HCS_LAYOUT_PERIODIC) {
    base = place_periodic(mesh, d.inclusion_cells);
  } else if (d.layout == HCS_LAYOUT_RANDOM) {
    base = place_random(mesh, d.inclusion_cells, d.removal, d.layout_seed);
  } else {
    throw UnknownEnum("unknown layout kind " + std::to_string(d.layout));
  }
  EpsilonSpec spec;
  if (d.eps_mode == HCS_EPS_UNIFORM) {
    spec = EpsilonSpec::uniform(d.eps_value);
  } else if (d.eps_mode == HCS_EPS_RANDOM) {
    spec = EpsilonSpec::random(d.eps_value, d.eps_upper);
  } else {
    throw UnknownEnum("unknown epsilon mode " + std::to_string(d.eps_mode));
  }
  InclusionLayout layout = assign_epsilon(std::move(base), spec, d.eps_seed);
  return std::make_unique<SaddleProblem>(std::move(mesh), std::move(layout));
}

SparseSymMatrix block_matrix(const InclusionBlocks& blocks, bool mass) {
  std::vector<Triplet> t;
  for (int s = 0; s < blocks.count(); ++s) {
    const SparseSymMatrix& b = mass ? blocks.mass[s] : blocks.stiffness[s];
    const int off = blocks.offsets[s];
    for (int r = 0; r < b.dimension(); ++r) {
      for (int k = b.row_ptr()[r]; k < b.row_ptr()[r + 1]; ++k) t.push_back({off + r, off + b.col_idx()[k], b.values()[k]});
    }
  }
  return SparseSymMatrix::from_triplets(blocks.total_size(), t);
}

SparseSymMatrix q_matrix(const InclusionBlocks& blocks) {
  std::vector<Triplet> t;
  for (int s = 0; s < blocks.count(); ++s) {
    const Vector& m = blocks.rank_one[s].mass_weights;
    const int off = blocks.offsets[s];
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        t.push_back({off + static_cast<int>(i), off + static_cast<int>(j), m[i] * m[j] / blocks.rank_one[s].side_sq()});
      }
    }
  }
  return SparseSymMatrix::from_triplets(blocks.total_size(), t);
}

SparseSymMatrix saddle_matrix(const SaddleOperator& op) {
  std::vector<Triplet> t;
  Vector e(static_cast<std::size_t>(op.size()), 0.0);
  for (int j = 0; j < op.size(); ++j) {
    e[j] = 1.0;
    const Vector col = op.apply(e);
    e[j] = 0.0;
    for (int i = 0; i < op.size(); ++i) {
      if (col[i] != 0.0) t.push_back({i, j, col[i]});
    }
  }
  return SparseSymMatrix::from_triplets(op.size(), t);
}

}  // namespace

extern "C" {

const char* hcs_status_string(hcs_status status) {
  switch (status) {
    case HCS_OK: return "ok";
    case HCS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HCS_ERR_INVALID_MESH: return "invalid mesh";
    case HCS_ERR_LAYOUT: return "invalid inclusion layout";
    case HCS_ERR_PARAMETER: return "invalid parameter";
    case HCS_ERR_DIMENSION: return "dimension mismatch";
    case HCS_ERR_BREAKDOWN: return "solver breakdown";
    case HCS_ERR_MAX_ITERATIONS: return "maximum iterations exceeded";
    case HCS_ERR_CONTRACT: return "contract violation";
    case HCS_ERR_FACTORIZATION: return "factorization failed";
    case HCS_ERR_VERIFICATION: return "verification failed";
    case HCS_ERR_IO: return "i/o error";
    case HCS_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case HCS_ERR_OUT_OF_MEMORY: return "out of memory";
    case HCS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* hcs_last_error_message(void) { return g_last_error.c_str(); }

const char* hcs_version(void) { return HCSADDLE_VERSION; }

void hcs_problem_desc_init(hcs_problem_desc* desc) {
  if (desc == nullptr) return;
  *desc = hcs_problem_desc{};
  desc->cells_per_side = 8;
  desc->inclusion_cells = 2;
  desc->layout = HCS_LAYOUT_PERIODIC;
  desc->removal = 0;
  desc->layout_seed = 1;
  desc->eps_mode = HCS_EPS_UNIFORM;
  desc->eps_value = 1e-4;
  desc->eps_upper = 1e-2;
  desc->eps_seed = 1;
}

hcs_status hcs_problem_create(const hcs_problem_desc* desc, hcs_problem** out) {
  HCS_REQUIRE(desc != nullptr && out != nullptr, "hcs_problem_create: null argument");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<hcs_problem>();
    handle->desc = *desc;
    handle->problem = build(*desc);
    *out = handle.release();
    return HCS_OK;
  });
}

void hcs_problem_destroy(hcs_problem* problem) { delete problem; }

hcs_status hcs_problem_dims(const hcs_problem* problem, int32_t* primal, int32_t* inclusion, int32_t* inclusions) {
  HCS_REQUIRE(problem != nullptr, "hcs_problem_dims: null problem");
  if (primal != nullptr) *primal = problem->problem->primal_size();
  if (inclusion != nullptr) *inclusion = problem->problem->inclusion_size();
  if (inclusions != nullptr) *inclusions = problem->problem->layout().count();
  return HCS_OK;
}

hcs_status hcs_problem_eps_range(const hcs_problem* problem, double* eps_min, double* eps_max) {
  HCS_REQUIRE(problem != nullptr, "hcs_problem_eps_range: null problem");
  if (eps_min != nullptr) *eps_min = problem->problem->layout().eps_min();
  if (eps_max != nullptr) *eps_max = problem->problem->layout().eps_max();
  return HCS_OK;
}

hcs_status hcs_layout_manifest_json(const hcs_problem* problem, char* buffer, size_t capacity, size_t* needed) {
  HCS_REQUIRE(problem != nullptr, "hcs_layout_manifest_json: null problem");
  return guarded([&] {
    const std::string json = problem->problem->layout().manifest_json();
    if (needed != nullptr) *needed = json.size() + 1;
    if (buffer == nullptr || capacity < json.size() + 1) {
      return fail(HCS_ERR_BUFFER_TOO_SMALL, "manifest needs " + std::to_string(json.size() + 1) + " bytes");
    }
    std::memcpy(buffer, json.c_str(), json.size() + 1);
    return HCS_OK;
  });
}

hcs_status hcs_problem_corrupt_q(hcs_problem* problem, double factor) {
  HCS_REQUIRE(problem != nullptr, "hcs_problem_corrupt_q: null problem");
  return guarded([&] {
    problem->problem->corrupt_operator_rank_one(factor);
    return HCS_OK;
  });
}

hcs_status hcs_apply_saddle(const hcs_problem* problem, const double* z, size_t length, double* out,
                            size_t out_length) {
  HCS_REQUIRE(problem != nullptr && z != nullptr && out != nullptr, "hcs_apply_saddle: null argument");
  return guarded([&] {
    const SaddleOperator& op = problem->problem->saddle();
    require_same_size(length, static_cast<std::size_t>(op.size()), "hcs_apply_saddle");
    require_same_size(out_length, length, "hcs_apply_saddle: output");
    const Vector y = op.apply(std::span<const double>(z, length));
    std::copy(y.begin(), y.end(), out);
    return HCS_OK;
  });
}

hcs_status hcs_apply_hs_composed(const hcs_problem* problem, int32_t tag, int32_t block, const double* preimage,
                                 size_t length, double* out, size_t out_length) {
  HCS_REQUIRE(problem != nullptr && preimage != nullptr && out != nullptr, "hcs_apply_hs_composed: null argument");
  return guarded([&] {
    const SchurPreconditioner hs(problem->problem->blocks());
    Vector pre(preimage, preimage + length);
    HsTerm term;
    switch (tag) {
      case HCS_HS_BD:
        require_same_size(length, static_cast<std::size_t>(hs.size()), "hcs_apply_hs_composed");
        term = BdImage{std::move(pre)};
        break;
      case HCS_HS_Q:
        require_same_size(length, static_cast<std::size_t>(hs.size()), "hcs_apply_hs_composed");
        term = QImage{std::move(pre)};
        break;
      case HCS_HS_SIGMA_BD:
        if (block < 0 || block >= hs.blocks().count()) {
          throw Error(ErrorCode::kParameter, "block index " + std::to_string(block) + " out of range");
        }
        term = SigmaBdImage{block, std::move(pre)};
        break;
      default:
        throw Error(ErrorCode::kContract, "H_S operand must be tagged as B_D, Q or Sigma B_D image (tag " +
                                              std::to_string(tag) + ")");
    }
    const Vector y = hs.apply_composed(term);
    require_same_size(out_length, y.size(), "hcs_apply_hs_composed: output");
    std::copy(y.begin(), y.end(), out);
    return HCS_OK;
  });
}

void hcs_solver_config_init(hcs_solver_config* config) {
  if (config == nullptr) return;
  *config = hcs_solver_config{};
  config->method = HCS_METHOD_PL;
  config->delta = 1e-6;
  config->max_iterations = 1000;
  config->seed = 1;
  config->ha_kind = HCS_HA_EXACT;
  config->inner_base = HCS_HA_SGS;
  config->inner_steps = 12;
}

hcs_status hcs_solve(const hcs_problem* problem, const hcs_solver_config* config, double* solution,
                     size_t solution_length, hcs_solver_report* report, double* norms, size_t norms_capacity,
                     size_t* norms_length) {
  HCS_REQUIRE(problem != nullptr && config != nullptr, "hcs_solve: null argument");
  const auto fill = [&](const SolverReport& r) {
    if (report != nullptr) {
      *report = hcs_solver_report{};
      report->iterations = r.iterations;
      report->converged = r.converged ? 1 : 0;
      report->a_applications = r.a_applications;
      report->ha_applications = r.ha_applications;
      report->wall_seconds = r.wall_seconds;
      report->initial_norm = r.stop_norms.empty() ? 0.0 : r.stop_norms.front();
      report->final_norm = r.stop_norms.empty() ? 0.0 : r.stop_norms.back();
      report->worst_increase = r.worst_increase();
    }
    if (norms_length != nullptr) *norms_length = r.stop_norms.size();
    if (norms != nullptr) {
      std::copy_n(r.stop_norms.begin(), std::min(norms_capacity, r.stop_norms.size()), norms);
    }
  };
  return guarded([&] {
    SolverConfig c;
    c.method = to_method(config->method);
    c.delta = config->delta;
    c.max_iterations = config->max_iterations;
    c.seed = config->seed;
    c.ha.kind = to_a_kind(config->ha_kind);
    c.ha.inner_base = to_a_kind(config->inner_base);
    c.ha.inner_steps = config->inner_steps;
    try {
      const SolveResult result = solve_homogeneous(*problem->problem, c);
      fill(result.report);
      if (solution != nullptr) {
        require_same_size(solution_length, result.solution.size(), "hcs_solve: solution");
        std::copy(result.solution.begin(), result.solution.end(), solution);
      }
    } catch (const SolverError& e) {
      fill(e.report());
      throw;
    }
    return HCS_OK;
  });
}

hcs_status hcs_verify_intervals(const hcs_problem* problem, int32_t ha_kind, double tolerance,
                                hcs_spectrum_report* report, double* eigenvalues, size_t capacity, size_t* length) {
  HCS_REQUIRE(problem != nullptr && report != nullptr, "hcs_verify_intervals: null argument");
  return guarded([&] {
    SpectrumOptions options;
    options.ha.kind = to_a_kind(ha_kind);
    options.tolerance = tolerance;
    const SpectrumReport r = verify_intervals(*problem->problem, options);
    const IntervalConstants& c = r.constants;
    *report = hcs_spectrum_report{};
    report->dimension = static_cast<int32_t>(r.practical_full.eigenvalues.size());
    report->inclusions = r.inclusions;
    report->a0 = c.a0;
    report->b0 = c.b0;
    report->eps_max = c.eps_max;
    report->r_max = c.r_max;
    report->mu_hat1 = c.mu_hat1;
    report->mu_hat2 = c.mu_hat2;
    report->mu_check1 = c.mu_check1;
    report->mu_check2 = c.mu_check2;
    report->beta1 = c.beta1;
    report->beta2 = c.beta2;
    report->alpha_min = c.alpha_min;
    report->alpha_max = c.alpha_max;
    report->c1 = c.c1;
    report->c2 = c.c2;
    report->c3 = c.c3;
    report->c4 = c.c4;
    report->practical_full_outside = r.practical_full.outside;
    report->practical_full_excess = r.practical_full.worst_excess;
    report->h0_full_outside = r.h0_full.outside;
    report->h0_full_excess = r.h0_full.worst_excess;
    report->h0_restricted_outside = r.h0_restricted.outside;
    report->h0_restricted_excess = r.h0_restricted.worst_excess;
    report->practical_restricted_outside = r.practical_restricted.outside;
    report->practical_restricted_excess = r.practical_restricted.worst_excess;
    report->kernel_split_error = r.kernel_split_error;
    report->literal_pass = r.practical_full.pass ? 1 : 0;
    report->verdict = r.verdict() ? 1 : 0;
    const auto& ev = r.practical_full.eigenvalues;
    if (length != nullptr) *length = ev.size();
    if (eigenvalues != nullptr) std::copy_n(ev.begin(), std::min(capacity, ev.size()), eigenvalues);
    return HCS_OK;
  });
}

hcs_status hcs_condition_sigma(const hcs_problem* problem, double* condition) {
  HCS_REQUIRE(problem != nullptr && condition != nullptr, "hcs_condition_sigma: null argument");
  return guarded([&] {
    const SaddleProblem& p = *problem->problem;
    *condition = condition_number(assemble_sigma_matrix(p.mesh(), p.layout(), p.ordering()));
    return HCS_OK;
  });
}

hcs_status hcs_export_matrix(const hcs_problem* problem, const char* which, const char* path) {
  HCS_REQUIRE(problem != nullptr && which != nullptr && path != nullptr, "hcs_export_matrix: null argument");
  return guarded([&] {
    const SaddleProblem& p = *problem->problem;
    const std::string name(which);
    SparseSymMatrix matrix;
    if (name == "A") {
      matrix = p.stiffness();
    } else if (name == "A_sigma") {
      matrix = assemble_sigma_matrix(p.mesh(), p.layout(), p.ordering());
    } else if (name == "B_D") {
      matrix = block_matrix(p.blocks(), false);
    } else if (name == "M") {
      matrix = block_matrix(p.blocks(), true);
    } else if (name == "Q") {
      matrix = q_matrix(p.blocks());
    } else if (name == "saddle") {
      matrix = saddle_matrix(p.saddle());
    } else {
      throw Error(ErrorCode::kParameter, "unknown matrix '" + name + "' (A, A_sigma, B_D, M, Q, saddle)");
    }
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::kIo, std::string("cannot open ") + path + " for writing");
    matrix.write_matrix_market(os);
    if (!os) throw Error(ErrorCode::kIo, std::string("write failed for ") + path);
    return HCS_OK;
  });
}

}  // extern "C"
