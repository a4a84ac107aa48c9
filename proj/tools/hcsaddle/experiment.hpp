#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"

namespace hcstool {

/// One problem instance of the sweep; solves and spectra run on it.
struct Instance {
  int cells = 0;
  int inclusion_cells = 0;
  std::string layout;
  double eps = 0.0;
  std::uint64_t seed = 0;
};

/// Instances in axis order (M, k, layout, eps, seed).
[[nodiscard]] std::vector<Instance> enumerate_instances(const ExperimentConfig& config);
[[nodiscard]] hcs_problem_desc describe(const Instance& instance, const ExperimentConfig& config);
[[nodiscard]] std::string label(const Instance& instance);

/// Owning wrapper around the C handle.
class Problem {
 public:
  Problem(const Instance& instance, const ExperimentConfig& config);
  ~Problem() { hcs_problem_destroy(handle_); }
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  [[nodiscard]] const hcs_problem* get() const noexcept { return handle_; }
  [[nodiscard]] hcs_problem* get() noexcept { return handle_; }
  [[nodiscard]] int inclusions() const;

 private:
  hcs_problem* handle_ = nullptr;
};

/// Error from the C layer, carrying its status.
class ApiError : public std::runtime_error {
 public:
  ApiError(hcs_status status, const std::string& where);
  [[nodiscard]] hcs_status status() const noexcept { return status_; }

 private:
  hcs_status status_;
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions are
/// rethrown after all workers stop (the first one by index).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

struct SolveRow {
  Instance instance;
  std::string method;
  double delta = 0.0;
  int inclusions = 0;
  double eps_min = 0.0;
  hcs_solver_report report{};
  hcs_status status = HCS_OK;
  std::string error;
};

[[nodiscard]] std::vector<SolveRow> run_solves(const ExperimentConfig& config, int threads);
[[nodiscard]] std::string solve_csv(const std::vector<SolveRow>& rows);
/// One table per (M, k, layout, delta): rows eps, columns methods, cells = mean
/// {A, H_A}-application count over seeds.
[[nodiscard]] std::string cost_markdown(const std::vector<SolveRow>& rows, const ExperimentConfig& config);

struct SpectrumRow {
  Instance instance;
  int inclusions = 0;
  hcs_spectrum_report report{};
  std::vector<double> eigenvalues;
  hcs_status status = HCS_OK;
  std::string error;
};

[[nodiscard]] std::vector<SpectrumRow> run_spectra(const ExperimentConfig& config, int threads);
[[nodiscard]] std::string spectrum_csv(const std::vector<SpectrumRow>& rows);
[[nodiscard]] std::string eigenvalue_csv(const std::vector<SpectrumRow>& rows);
[[nodiscard]] std::string verdict_text(const std::vector<SpectrumRow>& rows);

/// Run manifest: version, config hash and text, per-run seeds, timestamp.
[[nodiscard]] std::string manifest_json(const ExperimentConfig& config, const std::string& command,
                                        const std::vector<Instance>& instances);

}  // namespace hcstool
