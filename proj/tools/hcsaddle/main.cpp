#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "experiment.hpp"

namespace fs = std::filesystem;
using namespace hcstool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerification = 2;

struct Options {
  std::string config_path;
  std::string out_dir;
  int threads = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> overrides;
};

ExperimentConfig load(const Options& opt) {
  RawConfig raw;
  if (!opt.config_path.empty()) raw = read_config_file(opt.config_path);
  for (const auto& item : opt.overrides) {
    const RawConfig one = parse_config_text(item);
    if (one.empty()) throw ConfigError("--set '" + item + "': expected key=value");
    for (const auto& [key, value] : one) raw[key] = value;
  }
  if (!opt.seeds.empty()) {
    std::string list;
    for (std::size_t i = 0; i < opt.seeds.size(); ++i) list += (i ? "," : "") + std::to_string(opt.seeds[i]);
    raw["seeds"] = list;
  }
  return make_experiment_config(raw);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path prepare_out(const Options& opt) {
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  return dir;
}

int report_failures(const std::vector<SolveRow>& rows) {
  int failures = 0;
  for (const auto& r : rows) {
    if (r.status == HCS_OK) continue;
    ++failures;
    std::cerr << "error: " << r.method << ' ' << label(r.instance) << ": " << r.error << '\n';
  }
  return failures == 0 ? kExitOk : kExitError;
}

int cmd_solve(const Options& opt) {
  const ExperimentConfig config = load(opt);
  const auto rows = run_solves(config, opt.threads);
  const std::string csv = solve_csv(rows);
  if (opt.out_dir.empty()) {
    std::cout << csv;
  } else {
    const fs::path dir = prepare_out(opt);
    write_file(dir / "solve.csv", csv);
    write_file(dir / "manifest.json", manifest_json(config, "solve", enumerate_instances(config)));
    std::cout << "wrote " << rows.size() << " runs to " << (dir / "solve.csv").string() << '\n';
  }
  return report_failures(rows);
}

int cmd_cost(const Options& opt) {
  const ExperimentConfig config = load(opt);
  const auto rows = run_solves(config, opt.threads);
  const std::string table = cost_markdown(rows, config);
  std::cout << table;
  if (!opt.out_dir.empty()) {
    const fs::path dir = prepare_out(opt);
    write_file(dir / "cost.md", table);
    write_file(dir / "solve.csv", solve_csv(rows));
    write_file(dir / "manifest.json", manifest_json(config, "cost", enumerate_instances(config)));
  }
  return report_failures(rows);
}

int cmd_spectrum(const Options& opt) {
  const ExperimentConfig config = load(opt);
  const auto rows = run_spectra(config, opt.threads);
  const std::string verdict = verdict_text(rows);
  std::cout << verdict;
  if (!opt.out_dir.empty()) {
    const fs::path dir = prepare_out(opt);
    write_file(dir / "spectrum.csv", spectrum_csv(rows));
    write_file(dir / "eigenvalues.csv", eigenvalue_csv(rows));
    write_file(dir / "verdict.txt", verdict);
    write_file(dir / "manifest.json", manifest_json(config, "spectrum", enumerate_instances(config)));
  }
  bool errored = false;
  bool failed = false;
  for (const auto& r : rows) {
    if (r.status != HCS_OK) {
      errored = true;
      std::cerr << "error: " << label(r.instance) << ": " << r.error << '\n';
    } else if (!r.report.verdict) {
      failed = true;
    }
  }
  if (errored) return kExitError;
  return failed ? kExitVerification : kExitOk;
}

int cmd_export(const Options& opt) {
  if (opt.out_dir.empty()) throw ConfigError("export-matrix needs --out");
  const ExperimentConfig config = load(opt);
  const fs::path dir = prepare_out(opt);
  const auto instances = enumerate_instances(config);
  int written = 0;
  for (const auto& inst : instances) {
    Problem problem(inst, config);
    char eps[32];
    std::snprintf(eps, sizeof eps, "%.0e", inst.eps);
    for (const auto& which : config.matrices) {
      const std::string name = which + "_M" + std::to_string(inst.cells) + "_k" + std::to_string(inst.inclusion_cells) +
                               "_" + inst.layout + "_eps" + eps + "_s" + std::to_string(inst.seed) + ".mtx";
      const fs::path path = dir / name;
      const hcs_status status = hcs_export_matrix(problem.get(), which.c_str(), path.string().c_str());
      if (status != HCS_OK) throw ApiError(status, path.string());
      ++written;
    }
  }
  write_file(dir / "manifest.json", manifest_json(config, "export-matrix", instances));
  std::cout << "wrote " << written << " matrices to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-contrast saddle point solvers and spectral checks"};
  app.set_version_flag("--version", std::string(hcs_version()));
  app.require_subcommand(1);

  Options opt;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Experiment config file (key = value lines)");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--seed", opt.seeds, "Seed list, overrides the config");
    sub->add_option("--set", opt.overrides, "Config override key=value (repeatable)");
  };
  auto* solve = app.add_subcommand("solve", "Run the solver sweep and write the solve report");
  auto* spectrum = app.add_subcommand("spectrum", "Dense eigenvalue check of the preconditioned operator");
  auto* cost = app.add_subcommand("cost", "Cost table in A and H_A applications");
  auto* exporter = app.add_subcommand("export-matrix", "Write matrices in Matrix Market format");
  for (auto* sub : {solve, spectrum, cost, exporter}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (solve->parsed()) return cmd_solve(opt);
    if (spectrum->parsed()) return cmd_spectrum(opt);
    if (cost->parsed()) return cmd_cost(opt);
    return cmd_export(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kExitError;
}
