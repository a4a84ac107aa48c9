#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "experiment.hpp"

using namespace hcstool;
namespace fs = std::filesystem;

namespace {

ExperimentConfig config_from(const std::string& text) { return make_experiment_config(parse_config_text(text)); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliBinary : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hcsaddle_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text) const {
    const fs::path p = dir_ / "run.cfg";
    std::ofstream(p) << text;
    return p;
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(HCS_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, ParsesListsCommentsAndWhitespace) {
  const RawConfig raw = parse_config_text("# sweep\nmethods = PU, PL  # two\n\n  M=16,32\n");
  EXPECT_EQ(raw.at("methods"), "PU, PL");
  EXPECT_EQ(raw.at("M"), "16,32");
  const ExperimentConfig c = make_experiment_config(raw);
  EXPECT_EQ(c.methods, (std::vector<std::string>{"PU", "PL"}));
  EXPECT_EQ(c.cells, (std::vector<int>{16, 32}));
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW((void)parse_config_text("methods PU"), ConfigError);
  EXPECT_THROW((void)parse_config_text("colour = red"), ConfigError);
  EXPECT_THROW((void)parse_config_text("M = 8\nM = 16"), ConfigError);
  EXPECT_THROW((void)config_from("M = eight"), ConfigError);
  EXPECT_THROW((void)config_from("methods = GMRES"), ConfigError);
  EXPECT_THROW((void)config_from("ha = amg"), ConfigError);
  EXPECT_THROW((void)config_from("delta = 1.5"), ConfigError);
  EXPECT_THROW((void)config_from("eps = 0"), ConfigError);
  EXPECT_THROW((void)config_from("eps_mode = random\neps = 0.5\neps_upper = 0.1"), ConfigError);
  EXPECT_THROW((void)read_config_file("/nonexistent/run.cfg"), ConfigError);
}

TEST(Config, ValidatesEveryCombinationUpFront) {
  EXPECT_THROW((void)config_from("M = 16, 18\nk = 2"), ConfigError);
  EXPECT_THROW((void)config_from("M = 16\nk = 3"), ConfigError);
  EXPECT_THROW((void)config_from("M = 8\nk = 4\nlayouts = random\nremoval_fraction = 1"), ConfigError);
  EXPECT_THROW((void)config_from("inner_base = inner-cg"), ConfigError);
  EXPECT_NO_THROW((void)config_from("M = 16, 32\nk = 2, 4\nlayouts = periodic, random"));
}

TEST(Config, CanonicalTextAndHashIgnoreFormatting) {
  const ExperimentConfig a = config_from("M = 16\nmethods = PU,PL\n");
  const ExperimentConfig b = config_from("methods=PU , PL   # comment\n\nM=16");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(fnv1a(a.canonical()), fnv1a(b.canonical()));
  const ExperimentConfig c = config_from("M = 32\nmethods = PU,PL\n");
  EXPECT_NE(fnv1a(a.canonical()), fnv1a(c.canonical()));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Sweep, InstancesFollowAxisOrder) {
  const ExperimentConfig c = config_from("M = 8, 16\nk = 2\nlayouts = periodic, random\neps = 1e-2, 1e-4\nseeds = 1, 2");
  const auto inst = enumerate_instances(c);
  ASSERT_EQ(inst.size(), 16u);
  EXPECT_EQ(inst.front().cells, 8);
  EXPECT_EQ(inst.back().cells, 16);
  EXPECT_EQ(inst[0].seed, 1u);
  EXPECT_EQ(inst[1].seed, 2u);
  EXPECT_EQ(inst[2].eps, 1e-4);
  EXPECT_EQ(inst[4].layout, "random");
}

TEST(Sweep, EmptyAxisGivesHeaderOnlyCsv) {
  const ExperimentConfig c = config_from("M = 8\neps =");
  const auto rows = run_solves(c, 2);
  EXPECT_TRUE(rows.empty());
  const auto lines = lines_of(solve_csv(rows));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "# hcsaddle solve-report v1");
  EXPECT_EQ(lines[1].rfind("method,M,k,m,eps_min", 0), 0u);
}

TEST(Sweep, OutputIsIdenticalAcrossThreadCounts) {
  const ExperimentConfig c =
      config_from("M = 8, 16\nk = 2\nlayouts = periodic, random\neps = 1e-2, 1e-6\nseeds = 1, 2\nmethods = PU, PL, PCG-K");
  const std::string one = solve_csv(run_solves(c, 1));
  const std::string four = solve_csv(run_solves(c, 4));
  EXPECT_EQ(one, four);
  EXPECT_EQ(one, solve_csv(run_solves(c, 1)));
  EXPECT_EQ(lines_of(one).size(), 2u + 2 * 2 * 2 * 2 * 3);
}

TEST(Sweep, SeedChangesInitialGuessButNotConvergence) {
  const auto rows = run_solves(config_from("M = 16\nmethods = PL\neps = 1e-4\nseeds = 1, 2"), 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[0].report.initial_norm, rows[1].report.initial_norm);
  EXPECT_TRUE(rows[0].report.converged && rows[1].report.converged);
}

TEST(Sweep, PuIsFlatAcrossContrastAndLayout) {
  const ExperimentConfig c = config_from(
      "methods = PU\nM = 64\nk = 2\nlayouts = periodic, random\neps_mode = random\neps = 1e-2, 1e-4, 1e-6\n"
      "delta = 1e-6");
  const auto rows = run_solves(c, 2);
  ASSERT_EQ(rows.size(), 6u);
  int lo = 1 << 30;
  int hi = 0;
  for (const auto& r : rows) {
    ASSERT_EQ(r.status, HCS_OK) << r.error;
    lo = std::min(lo, r.report.iterations);
    hi = std::max(hi, r.report.iterations);
    EXPECT_EQ(r.report.ha_applications, r.report.iterations + 1);
    EXPECT_EQ(r.report.a_applications, 0);
  }
  EXPECT_LE(hi - lo, 2);
}

TEST(Cost, SingleMethodGivesOneColumn) {
  const ExperimentConfig c = config_from("methods = PL\nM = 16\neps = 1e-2, 1e-4");
  const std::string md = cost_markdown(run_solves(c, 1), c);
  EXPECT_NE(md.find("| eps | PL |"), std::string::npos);
  EXPECT_NE(md.find("|---|---|\n"), std::string::npos);
  EXPECT_EQ(md.find("PU"), std::string::npos);
}

TEST(Cost, CellsAreMeanApplicationCounts) {
  const ExperimentConfig c = config_from("methods = PU, PL, PCG-K\nM = 16\neps = 1e-4\nseeds = 1, 2");
  const auto rows = run_solves(c, 1);
  const std::string md = cost_markdown(rows, c);
  for (const std::string method : {"PU", "PL", "PCG-K"}) {
    double sum = 0.0;
    for (const auto& r : rows) {
      if (r.method == method) sum += static_cast<double>(r.report.a_applications + r.report.ha_applications);
    }
    char cell[32];
    std::snprintf(cell, sizeof cell, " %.1f |", sum / 2.0);
    EXPECT_NE(md.find(cell), std::string::npos) << method << cell << '\n' << md;
  }
}

TEST(Spectrum, EndpointsAreContrastFree) {
  const ExperimentConfig c = config_from("M = 8\nk = 2\neps_mode = uniform\neps = 1e-2, 1e-4, 1e-6");
  const auto rows = run_spectra(c, 2);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.status, HCS_OK) << r.error;
    EXPECT_EQ(r.report.verdict, 1);
    EXPECT_EQ(r.report.mu_hat1, rows[0].report.mu_hat1);
    EXPECT_EQ(r.report.mu_hat2, rows[0].report.mu_hat2);
    EXPECT_EQ(r.eigenvalues.size(), static_cast<std::size_t>(r.report.dimension));
  }
  EXPECT_NE(verdict_text(rows).find("PASS"), std::string::npos);
  EXPECT_EQ(lines_of(eigenvalue_csv(rows)).size(), 2u + 3 * rows[0].eigenvalues.size());
}

TEST(Manifest, RecordsHashVersionAndSeeds) {
  const ExperimentConfig c = config_from("M = 8\neps = 1e-4\nseeds = 3, 5");
  const auto j = nlohmann::json::parse(manifest_json(c, "solve", enumerate_instances(c)));
  char hash[40];
  std::snprintf(hash, sizeof hash, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a(c.canonical())));
  EXPECT_EQ(j.at("config_hash").get<std::string>(), hash);
  EXPECT_EQ(j.at("version").get<std::string>(), hcs_version());
  EXPECT_EQ(j.at("command").get<std::string>(), "solve");
  ASSERT_EQ(j.at("runs").size(), 2u);
  EXPECT_EQ(j.at("runs")[1].at("initial_guess_seed").get<std::uint64_t>(), 5u);
}

TEST_F(CliBinary, SpectrumPassesOnSmallInstance) {
  const fs::path cfg = write_config("M = 8\nk = 2\neps_mode = uniform\neps = 1e-4\n");
  EXPECT_EQ(run("spectrum --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0);
  for (const char* f : {"spectrum.csv", "eigenvalues.csv", "verdict.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
}

TEST_F(CliBinary, CorruptedRankOneTermFailsVerification) {
  const fs::path cfg = write_config("M = 8\nk = 2\neps_mode = uniform\neps = 1e-4\ncorrupt_q = 0\n");
  EXPECT_EQ(run("spectrum --config " + cfg.string()), 2);
  EXPECT_NE(read_file(dir_ / "stdout.txt").find("FAIL"), std::string::npos);
}

TEST_F(CliBinary, OversizedSpectrumIsRefused) {
  EXPECT_EQ(run("spectrum --set M=128 --set k=2"), 1);
  EXPECT_NE(read_file(dir_ / "stderr.txt").find("dense limit"), std::string::npos);
}

TEST_F(CliBinary, BadConfigExitsWithOne) {
  const fs::path cfg = write_config("methods = GMRES\n");
  EXPECT_EQ(run("solve --config " + cfg.string()), 1);
  EXPECT_NE(read_file(dir_ / "stderr.txt").find("config error"), std::string::npos);
  EXPECT_EQ(run("solve --config " + (dir_ / "missing.cfg").string()), 1);
  EXPECT_EQ(run("solve --threads 0"), 1);
}

TEST_F(CliBinary, RerunsAreByteIdentical) {
  const fs::path cfg = write_config("M = 8, 16\nmethods = PU, PL, PCG-K\neps = 1e-2, 1e-6\nlayouts = periodic, random\n");
  ASSERT_EQ(run("solve --config " + cfg.string() + " --threads 1 --out " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("solve --config " + cfg.string() + " --threads 3 --out " + (dir_ / "b").string()), 0);
  EXPECT_EQ(read_file(dir_ / "a" / "solve.csv"), read_file(dir_ / "b" / "solve.csv"));
  const auto ma = nlohmann::json::parse(read_file(dir_ / "a" / "manifest.json"));
  const auto mb = nlohmann::json::parse(read_file(dir_ / "b" / "manifest.json"));
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
}

TEST_F(CliBinary, SeedFlagOverridesConfig) {
  ASSERT_EQ(run("solve --set M=8 --set eps=1e-4 --set methods=PL --seed 4 --seed 9"), 0);
  const auto lines = lines_of(read_file(dir_ / "stdout.txt"));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_NE(lines[3].find(",9,"), std::string::npos);
}

TEST_F(CliBinary, ExportWritesMatrixMarketFiles) {
  ASSERT_EQ(run("export-matrix --set M=8 --set eps=1e-4 --set matrices=A,saddle --out " + (dir_ / "m").string()), 0);
  int mtx = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "m")) {
    if (e.path().extension() == ".mtx") {
      ++mtx;
      EXPECT_EQ(read_file(e.path()).rfind("%%MatrixMarket", 0), 0u);
    }
  }
  EXPECT_EQ(mtx, 2);
  EXPECT_EQ(run("export-matrix --set M=8"), 1);
}
