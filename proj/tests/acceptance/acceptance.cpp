#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fem_oracle.hpp"
#include "hcsaddle/solvers.hpp"
#include "hcsaddle/spectral.hpp"
#include "test_support.hpp"

using namespace hcsaddle;
using hcstest::from_eigen;
using hcstest::max_abs;
using hcstest::max_abs_diff;
using hcstest::to_eigen;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  /// Only meaningful on failure: the failure is the documented deviation and
  /// every supporting check behind it holds.
  bool known_deviation = false;
};

void line(bool pass, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
void line(bool pass, const char* fmt, ...) {
  std::printf("%s ", pass ? "PASS" : "FAIL");
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stdout, fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
}

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  std::printf("    ");
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stdout, fmt, args);
  va_end(args);
  std::printf("\n");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kPu: return "PU";
    case Method::kPl: return "PL";
    case Method::kPcgK: return "PCG-K";
  }
  return "?";
}

constexpr Method kMethods[] = {Method::kPu, Method::kPl, Method::kPcgK};

/// Random layouts drop a quarter of the lattice, as in the CLI default.
std::unique_ptr<SaddleProblem> instance(int M, int k, bool random, double eps_min, std::uint64_t seed = 1) {
  const EpsilonSpec eps = EpsilonSpec::random(eps_min, 1e-2);
  if (!random) return hcstest::periodic_problem(M, k, eps, seed);
  const int per_side = M / (2 * k);
  return hcstest::random_problem(M, k, per_side * per_side / 4, eps, seed);
}

SolverConfig solver_config(Method method, APreconditionerSpec ha) {
  SolverConfig c;
  c.method = method;
  c.delta = 1e-6;
  c.ha = ha;
  return c;
}

/// Every PU and PCG-K report of the acceptance runs, for the monotonicity criterion.
struct MonotoneLog {
  int runs = 0;
  double worst = 0.0;
  std::string worst_run;
  void add(Method m, const SolverReport& r, const std::string& where) {
    if (m == Method::kPl) return;
    ++runs;
    if (r.worst_increase() > worst || worst_run.empty()) {
      worst = std::max(worst, r.worst_increase());
      worst_run = std::string(method_name(m)) + " " + where;
    }
  }
};

MonotoneLog g_monotone;

SolverReport run(const SaddleProblem& problem, Method method, APreconditionerSpec ha, const std::string& where) {
  const SolveResult res = solve_homogeneous(problem, solver_config(method, ha));
  g_monotone.add(method, res.report, where);
  return res.report;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_intervals() {
  bool literal = true;
  bool support = true;
  double worst_time = 0.0;
  for (const int M : {8, 16}) {
    for (const double eps : {1e-2, 1e-4, 1e-6}) {
      const auto start = Clock::now();
      const auto problem = hcstest::periodic_problem(M, 2, EpsilonSpec::uniform(eps));
      SpectrumOptions opt;
      opt.tolerance = 1e-8;
      const SpectrumReport r = verify_intervals(*problem, opt);
      worst_time = std::max(worst_time, seconds_since(start));
      const PencilCheck& full = r.practical_full;
      const int m = problem->blocks().count();

      const IntervalConstants& c = r.constants;
      const auto in = [](double v, double lo, double hi) { return v >= lo - 1e-8 && v <= hi + 1e-8; };
      int at_minus_one = 0;
      int corrected = 0;
      int unexplained = 0;
      for (double v : full.eigenvalues) {
        if (in(v, full.lo1, full.hi1) || in(v, full.lo2, full.hi2)) continue;
        if (std::abs(v + 1.0) <= 1e-8) {
          ++at_minus_one;
        } else if (in(v, c.c1, c.c2) || in(v, c.c3, c.c4)) {
          ++corrected;
        } else {
          ++unexplained;
        }
      }
      literal = literal && full.pass;
      support = support && r.verdict() && at_minus_one == m && unexplained == 0;
      note("M=%-2d eps=%.0e dim=%zu  set [%.6f, %.6f] U [1, %.6f]  outside=%d: %d at -1 (m=%d), %d in "
           "[C1,C2]U[C3,C4] = [%.6f, %.6f] U [%.6f, %.6f], %d unexplained",
           M, eps, full.eigenvalues.size(), full.lo1, full.hi1, full.hi2, full.outside, at_minus_one, m, corrected,
           c.c1, c.c2, c.c3, c.c4, unexplained);
      note("      restricted: H0 excess %.1e, practical excess %.1e, kernel split %.1e", r.h0_restricted.worst_excess,
           r.practical_restricted.worst_excess, r.kernel_split_error);
    }
  }
  note("supporting check (restricted pencils in their sets; every outlier is one of the m constant modes at -1 "
       "or lies in the corrected set): %s",
       support ? "holds" : "VIOLATED");
  const bool fast = worst_time < 60.0;
  line(literal && fast,
       "criterion 1: dense spectrum of H A_eps inside [mu_check1, mu_hat1] U [1, mu_hat2], M in {8,16}, "
       "eps in {1e-2,1e-4,1e-6} (slowest instance %.2f s)",
       worst_time);
  return {literal && fast, !literal && fast && support};
}

// ---------------------------------------------------------------- criterion 2

struct ReferenceRange {
  int lo;
  int hi;
};

Outcome criterion_contrast() {
  const auto start = Clock::now();
  const std::map<Method, ReferenceRange> reference = {
      {Method::kPu, {10, 11}}, {Method::kPl, {40, 46}}, {Method::kPcgK, {88, 93}}};
  const double eps_values[] = {1e-2, 1e-4, 1e-6};
  // iterations[method][layout][eps index]
  std::map<Method, std::array<std::array<int, 3>, 2>> it;
  for (int layout = 0; layout < 2; ++layout) {
    for (int e = 0; e < 3; ++e) {
      const auto problem = instance(64, 2, layout == 1, eps_values[e]);
      for (Method m : kMethods) {
        char where[64];
        std::snprintf(where, sizeof where, "M=64 k=2 %s eps=%.0e", layout ? "random" : "periodic", eps_values[e]);
        it[m][layout][e] = run(*problem, m, {}, where).iterations;
      }
    }
  }
  bool eps_flat = true;
  bool layout_flat = true;
  bool band = true;
  bool saturated_flat = true;
  for (Method m : kMethods) {
    int lo = 1 << 30;
    int hi = 0;
    int eps_spread = 0;
    int layout_spread = 0;
    int saturated_spread = 0;
    for (int layout = 0; layout < 2; ++layout) {
      const auto& row = it[m][layout];
      eps_spread = std::max(eps_spread, *std::max_element(row.begin(), row.end()) - *std::min_element(row.begin(), row.end()));
      saturated_spread = std::max(saturated_spread, std::abs(row[1] - row[2]));
      lo = std::min(lo, *std::min_element(row.begin(), row.end()));
      hi = std::max(hi, *std::max_element(row.begin(), row.end()));
    }
    for (int e = 0; e < 3; ++e) layout_spread = std::max(layout_spread, std::abs(it[m][0][e] - it[m][1][e]));
    const ReferenceRange p = reference.at(m);
    const double band_lo = 0.5 * p.lo;
    const double band_hi = 1.5 * p.hi;
    const bool in_band = lo >= band_lo && hi <= band_hi;
    eps_flat = eps_flat && eps_spread <= 2;
    layout_flat = layout_flat && layout_spread <= 2;
    saturated_flat = saturated_flat && saturated_spread <= 2;
    band = band && in_band;
    note("%-5s periodic %2d/%2d/%2d  random %2d/%2d/%2d  eps spread %d, layout spread %d, "
         "counts %d-%d vs reference %d-%d band [%.1f, %.1f] %s",
         method_name(m), it[m][0][0], it[m][0][1], it[m][0][2], it[m][1][0], it[m][1][1], it[m][1][2], eps_spread,
         layout_spread, lo, hi, p.lo, p.hi, band_lo, band_hi, in_band ? "inside" : "OUTSIDE");
  }
  const double t = seconds_since(start);
  const bool pass = eps_flat && layout_flat && band && t < 300.0;
  note("supporting checks: layout spread <= 2 %s; spread over eps_min in {1e-4, 1e-6} <= 2 %s",
       layout_flat ? "holds" : "VIOLATED", saturated_flat ? "holds" : "VIOLATED");
  line(pass, "criterion 2: contrast and layout flatness (spread <= 2) with counts within +-50%% of the reference counts, "
             "M=64, k=2, exact H_A (%.1f s)", t);
  return {pass, !pass && layout_flat && saturated_flat && t < 300.0};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_mesh() {
  const auto start = Clock::now();
  const std::pair<int, int> meshes[] = {{16, 2}, {32, 4}, {64, 8}};
  bool pass = true;
  for (Method m : kMethods) {
    std::vector<int> counts;
    for (const auto& [M, k] : meshes) {
      const auto problem = instance(M, k, false, 1e-6);
      counts.push_back(run(*problem, m, {}, "M=" + std::to_string(M) + " k=" + std::to_string(k) + " eps=1e-6").iterations);
    }
    const int lo = *std::min_element(counts.begin(), counts.end());
    const int hi = *std::max_element(counts.begin(), counts.end());
    const double variation = static_cast<double>(hi - lo) / lo;
    pass = pass && variation <= 0.20;
    note("%-5s M=16/32/64: %d/%d/%d  variation %.1f%%", method_name(m), counts[0], counts[1], counts[2],
         100.0 * variation);
  }
  const double t = seconds_since(start);
  pass = pass && t < 600.0;
  line(pass, "criterion 3: mesh robustness, k/M = 1/8, eps_min = 1e-6, variation <= 20%% (%.1f s)", t);
  return {pass, false};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_cost() {
  const auto start = Clock::now();
  const APreconditionerSpec mg{AKind::kMultigrid, AKind::kSymmetricGaussSeidel, 12};
  // Six inner steps at {1 A, 1 H_A} each: 12 counted applications per outer PU step.
  const APreconditionerSpec inner{AKind::kInnerCg, AKind::kMultigrid, 6};
  bool pass = true;
  for (const bool random : {false, true}) {
    for (const double eps : {1e-2, 1e-4, 1e-6}) {
      const auto problem = instance(64, 2, random, eps);
      char where[64];
      std::snprintf(where, sizeof where, "M=64 k=2 %s eps=%.0e mg", random ? "random" : "periodic", eps);
      const SolverReport pu = run(*problem, Method::kPu, inner, where);
      const SolverReport pl = run(*problem, Method::kPl, mg, where);
      const SolverReport pk = run(*problem, Method::kPcgK, mg, where);
      const bool ok = pu.converged && pl.converged && pk.converged && pl.cost() < pu.cost() &&
                      pu.cost() < pk.cost() && 2 * pl.cost() <= pk.cost();
      pass = pass && ok;
      note("%-8s eps=%.0e  cost PL %ld (%d it) < PU %ld (%d it) < PCG-K %ld (%d it), PL/PCG-K %.2f  %s",
           random ? "random" : "periodic", eps, static_cast<long>(pl.cost()), pl.iterations,
           static_cast<long>(pu.cost()), pu.iterations, static_cast<long>(pk.cost()), pk.iterations,
           static_cast<double>(pl.cost()) / static_cast<double>(pk.cost()), ok ? "ok" : "VIOLATED");
    }
  }
  {
    const auto problem = instance(64, 2, false, 1e-6);
    const SolverReport pu = run(*problem, Method::kPu, {}, "M=64 k=2 periodic eps=1e-6 exact");
    const SolverReport pl = run(*problem, Method::kPl, {}, "M=64 k=2 periodic eps=1e-6 exact");
    const SolverReport pk = run(*problem, Method::kPcgK, {}, "M=64 k=2 periodic eps=1e-6 exact");
    note("for reference, exact H_A (one application per factorized solve): PU %ld, PL %ld, PCG-K %ld",
         static_cast<long>(pu.cost()), static_cast<long>(pl.cost()), static_cast<long>(pk.cost()));
  }
  const double t = seconds_since(start);
  pass = pass && t < 300.0;
  line(pass, "criterion 4: cost PL < PU < PCG-K and PL <= 0.5 PCG-K, M=64, k=2, delta=1e-6, multigrid H_A, "
             "PU with 6-step inner CG (%.1f s)", t);
  return {pass, false};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion_equivalence() {
  const auto start = Clock::now();
  const auto problem = hcstest::periodic_problem(16, 2, EpsilonSpec::uniform(1e-4));
  const int m = problem->blocks().count();
  const auto ha = make_exact_a(problem->stiffness());
  const SchurPreconditioner hs(problem->blocks());
  const BlockPreconditioner h(*ha, hs);
  const Vector f = assemble_load(problem->mesh(), problem->ordering(), 1.0);
  SolverConfig cfg = solver_config(Method::kPl, {});
  cfg.delta = 1e-12;
  const SolveResult res =
      pl_solve(problem->saddle(), h, primal_rhs(f, problem->inclusion_size()), Vector(problem->saddle().size(), 0.0), cfg);
  const int N = problem->primal_size();
  const Eigen::VectorXd u_saddle = to_eigen(res.solution).head(N);
  const Eigen::VectorXd p_saddle = to_eigen(res.solution).tail(problem->inclusion_size());

  // Independent dense assembly of A_sigma and the load.
  const hcstest::DenseOracle oracle = hcstest::dense_oracle(problem->mesh(), problem->layout(), problem->ordering());
  const Eigen::VectorXd u_direct = oracle.a_sigma.llt().solve(to_eigen(f));
  const Eigen::VectorXd du = u_saddle - u_direct;
  const double u_err = std::sqrt(du.dot(oracle.a * du)) / std::sqrt(u_direct.dot(oracle.a * u_direct));
  const Eigen::VectorXd p_rec = to_eigen(recover_p_from_u(from_eigen(u_direct), problem->blocks()));
  const double p_err = (p_rec - p_saddle).norm() / p_saddle.norm();
  const double t = seconds_since(start);
  const bool pass = m == 16 && res.report.converged && u_err <= 1e-7 && p_err <= 1e-6 && t < 60.0;
  note("m=%d, PL %d iterations, u error %.2e (A-norm, relative), p error %.2e (relative)", m, res.report.iterations,
       u_err, p_err);
  line(pass, "criterion 5: saddle solution matches the dense high-contrast solve, M=16, k=2, eps=1e-4 (%.2f s)", t);
  return {pass, false};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_identities() {
  const auto start = Clock::now();
  const auto problem = hcstest::periodic_problem(16, 2, EpsilonSpec::random(1e-6), 7);
  const InclusionBlocks& b = problem->blocks();
  const SchurPreconditioner hs(b);
  const HsReference ref(b);
  const auto n = static_cast<std::size_t>(b.total_size());
  std::mt19937_64 gen(20240601);
  double composed = 0.0;
  double idempotence = 0.0;
  double symmetry = 0.0;
  double partition = 0.0;
  int inputs = 0;
  for (int s = 0; s < b.count(); ++s) {
    const auto off = static_cast<std::size_t>(b.offsets[s]);
    const auto len = static_cast<std::size_t>(b.offsets[s + 1] - b.offsets[s]);
    for (int trial = 0; trial < 100; ++trial) {
      Vector w(n, 0.0);
      Vector z(n, 0.0);
      const Vector ws = hcstest::random_vector(len, gen);
      const Vector zs = hcstest::random_vector(len, gen);
      std::copy(ws.begin(), ws.end(), w.begin() + static_cast<std::ptrdiff_t>(off));
      std::copy(zs.begin(), zs.end(), z.begin() + static_cast<std::ptrdiff_t>(off));

      Vector bw(n);
      b.apply_bd(w, bw);
      const Vector e_bd = ref.solve(bw);
      composed = std::max(composed, max_abs_diff(hs.apply_composed(BdImage{w}), e_bd) / std::max(1.0, max_abs(e_bd)));
      Vector qz(n);
      b.apply_q(z, qz);
      const Vector e_q = ref.solve(qz);
      composed = std::max(composed, max_abs_diff(hs.apply_composed(QImage{z}), e_q) / std::max(1.0, max_abs(e_q)));
      Vector sigma = b.stiffness[s].multiply(ws);
      scale(b.epsilon[s], sigma);
      const Vector e_sigma = ref.solve_block(s, sigma);
      composed = std::max(composed, max_abs_diff(hs.apply_composed(SigmaBdImage{s, ws}), e_sigma) /
                                        std::max(1.0, max_abs(e_sigma)));
      inputs += 3;

      const Vector px = hs.apply_projector(s, ws);
      idempotence = std::max(idempotence, max_abs_diff(hs.apply_projector(s, px), px));
      const double lhs = dot(b.mass[s].multiply(px), zs);
      const double rhs = dot(ws, b.mass[s].multiply(hs.apply_projector(s, zs)));
      symmetry = std::max(symmetry, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Vector y = hcstest::random_vector(n, gen);
    Vector sum = hs.apply_composed(BdImage{y});
    axpy(1.0, hs.apply_composed(QImage{y}), sum);
    partition = std::max(partition, max_abs_diff(sum, y));
  }
  const double t = seconds_since(start);
  const bool pass = composed <= 1e-12 && idempotence <= 1e-13 && symmetry <= 1e-13 && partition <= 1e-13 && t < 10.0;
  note("m=%d blocks, %d tagged inputs: composed vs reference %.1e, idempotence %.1e, M-symmetry %.1e, "
       "H_S B_D + H_S Q = I %.1e",
       b.count(), inputs, composed, idempotence, symmetry, partition);
  line(pass, "criterion 6: Schur preconditioner identity suite, 100 random inputs per block and tag (%.2f s)", t);
  return {pass, false};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_condition() {
  const auto start = Clock::now();
  std::vector<double> conds;
  for (const double eps : {1e-1, 1e-2, 1e-3}) {
    const auto problem = hcstest::periodic_problem(32, 4, EpsilonSpec::uniform(eps));
    const hcstest::DenseOracle oracle = hcstest::dense_oracle(problem->mesh(), problem->layout(), problem->ordering());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(oracle.a_sigma).eigenvalues();
    conds.push_back(ev(ev.size() - 1) / ev(0));
    const double lib = condition_number(assemble_sigma_matrix(problem->mesh(), problem->layout(), problem->ordering()));
    note("eps=%.0e  cond(A_sigma) = %.4e (library %.4e)", eps, conds.back(), lib);
  }
  bool pass = true;
  for (std::size_t i = 1; i < conds.size(); ++i) {
    const double factor = conds[i] / conds[i - 1];
    pass = pass && factor >= 5.0 && factor <= 20.0;
    note("growth factor per decade: %.3f", factor);
  }
  const double t = seconds_since(start);
  pass = pass && t < 120.0;
  line(pass, "criterion 7: cond(A_sigma) grows by a factor in [5, 20] per decade of contrast, M=32 (%.1f s)", t);
  return {pass, false};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion_monotone() {
  const bool pass = g_monotone.runs > 0 && g_monotone.worst <= 1e-12;
  note("%d PU and PCG-K runs, largest relative increase %.2e (%s)", g_monotone.runs, g_monotone.worst,
       g_monotone.worst_run.c_str());
  line(pass, "criterion 8: stopping norm never increases by more than 1e-12 relative in PU and PCG-K acceptance runs");
  return {pass, false};
}

}  // namespace

int main() {
  std::printf("hcsaddle acceptance\n");
  const std::vector<std::pair<int, Outcome (*)()>> criteria = {
      {1, criterion_intervals},   {2, criterion_contrast},   {3, criterion_mesh},      {4, criterion_cost},
      {5, criterion_equivalence}, {6, criterion_identities}, {7, criterion_condition}, {8, criterion_monotone}};
  // Failures analysed in the decisions record: the literal interval check and
  // the exact-H_A flatness/band check. Each is accepted only while its
  // supporting checks hold.
  const std::set<int> documented = {1, 2};
  int passed = 0;
  int unexpected = 0;
  std::vector<int> deviations;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      line(false, "criterion %d: exception: %s", id, e.what());
    }
    if (o.pass) {
      ++passed;
    } else if (o.known_deviation && documented.count(id) != 0) {
      deviations.push_back(id);
    } else {
      ++unexpected;
    }
  }
  std::string list;
  for (int id : deviations) list += (list.empty() ? "" : ", ") + std::to_string(id);
  std::printf("summary: %d/%zu criteria pass; documented deviations: %s; unexpected failures: %d\n", passed,
              criteria.size(), list.empty() ? "none" : list.c_str(), unexpected);
  return unexpected == 0 ? 0 : 1;
}
