#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace hcstool {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

void check(hcs_status status, const std::string& where) {
  if (status != HCS_OK) throw ApiError(status, where);
}

std::string error_text(hcs_status status) {
  std::string msg = hcs_last_error_message();
  return std::string(hcs_status_string(status)) + (msg.empty() ? "" : ": " + msg);
}

}  // namespace

ApiError::ApiError(hcs_status status, const std::string& where)
    : std::runtime_error(where + ": " + error_text(status)), status_(status) {}

std::vector<Instance> enumerate_instances(const ExperimentConfig& config) {
  std::vector<Instance> out;
  for (int M : config.cells) {
    for (int k : config.inclusion_cells) {
      for (const auto& layout : config.layouts) {
        for (double eps : config.eps_values) {
          for (std::uint64_t seed : config.seeds) out.push_back({M, k, layout, eps, seed});
        }
      }
    }
  }
  return out;
}

hcs_problem_desc describe(const Instance& instance, const ExperimentConfig& config) {
  hcs_problem_desc desc;
  hcs_problem_desc_init(&desc);
  desc.cells_per_side = instance.cells;
  desc.inclusion_cells = instance.inclusion_cells;
  desc.layout = layout_code(instance.layout);
  desc.removal =
      instance.layout == "random" ? removal_count(instance.cells, instance.inclusion_cells, config.removal_fraction) : 0;
  desc.layout_seed = instance.seed;
  desc.eps_mode = config.eps_mode == "uniform" ? HCS_EPS_UNIFORM : HCS_EPS_RANDOM;
  desc.eps_value = instance.eps;
  desc.eps_upper = config.eps_mode == "uniform" ? instance.eps : config.eps_upper;
  desc.eps_seed = instance.seed;
  return desc;
}

std::string label(const Instance& instance) {
  return "M=" + std::to_string(instance.cells) + " k=" + std::to_string(instance.inclusion_cells) +
         " layout=" + instance.layout + " eps=" + fmt("%.0e", instance.eps) + " seed=" + std::to_string(instance.seed);
}

Problem::Problem(const Instance& instance, const ExperimentConfig& config) {
  const hcs_problem_desc desc = describe(instance, config);
  check(hcs_problem_create(&desc, &handle_), label(instance));
  if (config.corrupt_q != 1.0) {
    const hcs_status status = hcs_problem_corrupt_q(handle_, config.corrupt_q);
    if (status != HCS_OK) {
      hcs_problem_destroy(handle_);
      handle_ = nullptr;
      throw ApiError(status, label(instance));
    }
  }
}

int Problem::inclusions() const {
  int32_t m = 0;
  check(hcs_problem_dims(handle_, nullptr, nullptr, &m), "dims");
  return m;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<SolveRow> run_solves(const ExperimentConfig& config, int threads) {
  const auto instances = enumerate_instances(config);
  const std::size_t per_instance = config.deltas.size() * config.methods.size();
  std::vector<SolveRow> rows(instances.size() * per_instance);
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    const Instance& inst = instances[i];
    Problem problem(inst, config);
    double eps_min = 0.0;
    double eps_max = 0.0;
    check(hcs_problem_eps_range(problem.get(), &eps_min, &eps_max), label(inst));
    const int m = problem.inclusions();
    std::size_t slot = i * per_instance;
    for (double delta : config.deltas) {
      for (const auto& method : config.methods) {
        SolveRow& row = rows[slot++];
        row.instance = inst;
        row.method = method == "PCG" ? "PCG-K" : method;
        row.delta = delta;
        row.inclusions = m;
        row.eps_min = eps_min;
        hcs_solver_config sc;
        hcs_solver_config_init(&sc);
        sc.method = method_code(method);
        sc.delta = delta;
        sc.max_iterations = config.max_iterations;
        sc.seed = inst.seed;
        sc.ha_kind = ha_code(sc.method == HCS_METHOD_PU && !config.pu_ha.empty() ? config.pu_ha : config.ha);
        sc.inner_base = ha_code(config.inner_base);
        sc.inner_steps = config.inner_steps;
        row.status = hcs_solve(problem.get(), &sc, nullptr, 0, &row.report, nullptr, 0, nullptr);
        if (row.status != HCS_OK) row.error = error_text(row.status);
      }
    }
  });
  return rows;
}

std::string solve_csv(const std::vector<SolveRow>& rows) {
  std::ostringstream out;
  out << "# hcsaddle solve-report v1\n";
  out << "method,M,k,m,eps_min,layout,delta,seed,iterations,a_applications,ha_applications,final_norm_ratio,status\n";
  for (const auto& r : rows) {
    const double ratio = r.report.initial_norm > 0.0 ? r.report.final_norm / r.report.initial_norm : 0.0;
    out << r.method << ',' << r.instance.cells << ',' << r.instance.inclusion_cells << ',' << r.inclusions << ','
        << fmt("%.3e", r.instance.eps) << ',' << r.instance.layout << ',' << fmt("%.3e", r.delta) << ',' << r.instance.seed
        << ',' << r.report.iterations << ',' << r.report.a_applications << ',' << r.report.ha_applications << ','
        << fmt("%.6e", ratio) << ',' << (r.status == HCS_OK ? "ok" : hcs_status_string(r.status)) << '\n';
  }
  return out.str();
}

std::string cost_markdown(const std::vector<SolveRow>& rows, const ExperimentConfig& config) {
  std::vector<std::string> methods;
  for (const auto& m : config.methods) {
    const std::string name = m == "PCG" ? "PCG-K" : m;
    if (std::find(methods.begin(), methods.end(), name) == methods.end()) methods.push_back(name);
  }
  std::ostringstream out;
  out << "# Cost in {A, H_A} applications\n\n";
  out << "Each cell is the mean of A_eps plus H_A applications over seeds; '-' marks a failed run.\n";
  for (int M : config.cells) {
    for (int k : config.inclusion_cells) {
      for (const auto& layout : config.layouts) {
        for (double delta : config.deltas) {
          int m = 0;
          for (const auto& r : rows) {
            if (r.instance.cells == M && r.instance.inclusion_cells == k && r.instance.layout == layout) m = r.inclusions;
          }
          out << "\n## M=" << M << ", k=" << k << ", m=" << m << ", layout=" << layout
              << ", delta=" << fmt("%.0e", delta) << "\n\n| eps |";
          for (const auto& name : methods) out << ' ' << name << " |";
          out << "\n|---|";
          for (std::size_t i = 0; i < methods.size(); ++i) out << "---|";
          out << '\n';
          for (double eps : config.eps_values) {
            out << "| " << fmt("%.0e", eps) << " |";
            for (const auto& name : methods) {
              double sum = 0.0;
              int count = 0;
              bool failed = false;
              for (const auto& r : rows) {
                if (r.instance.cells != M || r.instance.inclusion_cells != k || r.instance.layout != layout ||
                    r.instance.eps != eps || r.delta != delta || r.method != name) {
                  continue;
                }
                if (r.status != HCS_OK) failed = true;
                sum += static_cast<double>(r.report.a_applications + r.report.ha_applications);
                ++count;
              }
              if (failed || count == 0) {
                out << " - |";
              } else {
                out << ' ' << fmt("%.1f", sum / count) << " |";
              }
            }
            out << '\n';
          }
        }
      }
    }
  }
  return out.str();
}

std::vector<SpectrumRow> run_spectra(const ExperimentConfig& config, int threads) {
  const auto instances = enumerate_instances(config);
  std::vector<SpectrumRow> rows(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    SpectrumRow& row = rows[i];
    row.instance = instances[i];
    Problem problem(row.instance, config);
    int32_t primal = 0;
    int32_t inclusion = 0;
    int32_t m = 0;
    check(hcs_problem_dims(problem.get(), &primal, &inclusion, &m), label(row.instance));
    row.inclusions = m;
    row.eigenvalues.resize(static_cast<std::size_t>(primal + inclusion));
    std::size_t length = 0;
    row.status = hcs_verify_intervals(problem.get(), ha_code(config.ha), config.spectrum_tolerance, &row.report,
                                      row.eigenvalues.data(), row.eigenvalues.size(), &length);
    if (row.status != HCS_OK) {
      row.error = error_text(row.status);
      row.eigenvalues.clear();
    } else {
      row.eigenvalues.resize(std::min(length, row.eigenvalues.size()));
    }
  });
  return rows;
}

std::string spectrum_csv(const std::vector<SpectrumRow>& rows) {
  std::ostringstream out;
  out << "# hcsaddle spectrum-report v1\n";
  out << "M,k,m,eps,layout,seed,a0,b0,r_max,alpha_min,alpha_max,c1,c2,c3,c4,lambda_min,lambda_max,"
         "practical_full_outside,h0_full_outside,h0_restricted_outside,practical_restricted_outside,"
         "kernel_split_error,literal_pass,verdict\n";
  for (const auto& r : rows) {
    const auto& s = r.report;
    out << r.instance.cells << ',' << r.instance.inclusion_cells << ',' << r.inclusions << ','
        << fmt("%.3e", r.instance.eps) << ',' << r.instance.layout << ',' << r.instance.seed << ',';
    if (r.status != HCS_OK) {
      out << ",,,,,,,,,,,,,,,,," << hcs_status_string(r.status) << '\n';
      continue;
    }
    const double lo = r.eigenvalues.empty() ? 0.0 : r.eigenvalues.front();
    const double hi = r.eigenvalues.empty() ? 0.0 : r.eigenvalues.back();
    for (double v : {s.a0, s.b0, s.r_max, s.alpha_min, s.alpha_max, s.c1, s.c2, s.c3, s.c4, lo, hi}) {
      out << fmt("%.10e", v) << ',';
    }
    out << s.practical_full_outside << ',' << s.h0_full_outside << ',' << s.h0_restricted_outside << ','
        << s.practical_restricted_outside << ',' << fmt("%.3e", s.kernel_split_error) << ','
        << (s.literal_pass ? "PASS" : "FAIL") << ',' << (s.verdict ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

std::string eigenvalue_csv(const std::vector<SpectrumRow>& rows) {
  std::ostringstream out;
  out << "# hcsaddle eigenvalues v1\n";
  out << "M,k,eps,layout,seed,index,eigenvalue\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
      out << r.instance.cells << ',' << r.instance.inclusion_cells << ',' << fmt("%.3e", r.instance.eps) << ','
          << r.instance.layout << ',' << r.instance.seed << ',' << i << ',' << fmt("%.16e", r.eigenvalues[i]) << '\n';
    }
  }
  return out.str();
}

std::string verdict_text(const std::vector<SpectrumRow>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) {
    out << label(r.instance) << " m=" << r.inclusions << ": ";
    if (r.status != HCS_OK) {
      out << "ERROR " << r.error << '\n';
      continue;
    }
    const auto& s = r.report;
    out << (s.verdict ? "PASS" : "FAIL") << '\n';
    out << "  a0=" << fmt("%.4f", s.a0) << " b0=" << fmt("%.4f", s.b0) << " r_max=" << fmt("%.3e", s.r_max)
        << " beta=[" << fmt("%.4f", s.beta1) << ", " << fmt("%.4f", s.beta2) << "]\n";
    out << "  H0 mean-free pencil: " << s.h0_restricted_outside << " outside [" << fmt("%.4f", s.mu_check1) << ", "
        << fmt("%.4f", s.mu_hat1) << "] U [1, " << fmt("%.4f", s.mu_hat2) << "]\n";
    out << "  H mean-free pencil:  " << s.practical_restricted_outside << " outside [" << fmt("%.4f", s.c1) << ", "
        << fmt("%.4f", s.c2) << "] U [" << fmt("%.4f", s.c3) << ", " << fmt("%.4f", s.c4) << "]\n";
    out << "  kernel split error:  " << fmt("%.2e", s.kernel_split_error) << '\n';
    out << "  full H pencil vs [mu_check1, mu_hat1] U [1, mu_hat2]: " << s.practical_full_outside
        << " outside (worst excess " << fmt("%.3e", s.practical_full_excess) << ")\n";
  }
  return out.str();
}

std::string manifest_json(const ExperimentConfig& config, const std::string& command,
                          const std::vector<Instance>& instances) {
  using nlohmann::json;
  const std::string canonical = config.canonical();
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

  json runs = json::array();
  for (const auto& inst : instances) {
    const hcs_problem_desc desc = describe(inst, config);
    runs.push_back({{"M", inst.cells},
                    {"k", inst.inclusion_cells},
                    {"layout", inst.layout},
                    {"removal", desc.removal},
                    {"eps", inst.eps},
                    {"layout_seed", desc.layout_seed},
                    {"eps_seed", desc.eps_seed},
                    {"initial_guess_seed", inst.seed}});
  }
  json doc = {{"tool", "hcsaddle"},
              {"version", hcs_version()},
              {"command", command},
              {"config_hash", std::string("fnv1a64:") + hash},
              {"config", canonical},
              {"timestamp", stamp},
              {"runs", runs}};
  return doc.dump(2) + "\n";
}

}  // namespace hcstool
