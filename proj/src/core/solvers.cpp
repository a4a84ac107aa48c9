#include "hcsaddle/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hcsaddle/rng.hpp"

namespace hcsaddle {

std::string to_string(Method method) {
  switch (method) {
    case Method::kPu: return "PU";
    case Method::kPl: return "PL";
    case Method::kPcgK: return "PCG-K";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::kPu, Method::kPl, Method::kPcgK}) {
    if (to_string(m) == text) return m;
  }
  if (text == "PCG") return Method::kPcgK;
  throw Error(ErrorCode::kParameter, "unknown method '" + text + "' (expected PU, PL or PCG-K)");
}

void SolverConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kParameter, "delta must lie in (0, 1), got " + std::to_string(delta));
  }
  if (max_iterations < 1) throw Error(ErrorCode::kParameter, "max_iterations must be positive");
  if (ha.inner_steps < 1) throw Error(ErrorCode::kParameter, "inner_steps must be positive");
}

double SolverReport::final_ratio() const noexcept {
  if (stop_norms.empty() || stop_norms.front() == 0.0) return 0.0;
  return stop_norms.back() / stop_norms.front();
}

double SolverReport::worst_increase() const noexcept {
  double worst = 0.0;
  for (std::size_t k = 1; k < stop_norms.size(); ++k) {
    if (stop_norms[k - 1] > 0.0) worst = std::max(worst, stop_norms[k] / stop_norms[k - 1] - 1.0);
  }
  return worst;
}

Vector random_initial_guess(std::size_t size, std::uint64_t seed) {
  CounterRng rng(seed, 3);
  Vector x(size);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

SaddleImage primal_rhs(std::span<const double> f, int inclusion_size) {
  return {Vector(f.begin(), f.end()), SchurTerm::zeros(static_cast<std::size_t>(inclusion_size))};
}

namespace {

using Clock = std::chrono::steady_clock;

double dot_image(const SaddleImage& a, std::span<const double> b) {
  require_same_size(a.u.size() + a.p.value.size(), b.size(), "dot_image");
  return dot(a.u, b.first(a.u.size())) + dot(a.p.value, b.subspan(a.u.size()));
}

double checked_sqrt(double quad, double scale, const char* what) {
  if (quad < -1e-12 * std::max(scale, 1e-300)) {
    throw Error(ErrorCode::kContract, std::string(what) + ": negative quadratic form " + std::to_string(quad));
  }
  return std::sqrt(std::max(quad, 0.0));
}

/// Bookkeeping shared by the outer iterations.
class Run {
 public:
  Run(const SolverConfig& config, const APreconditioner* ha) : config_(config), ha_(ha), start_(Clock::now()) {
    config.validate();
  }

  void count_a(std::int64_t n = 1) { report_.a_applications += n; }
  void count_ha() {
    const ApplyCost c = ha_->cost();
    report_.a_applications += c.a_products;
    report_.ha_applications += c.base_applications;
  }

  /// Records a stopping norm; returns true once the target reduction is met.
  bool record(double norm) {
    report_.stop_norms.push_back(norm);
    report_.iterations = static_cast<int>(report_.stop_norms.size()) - 1;
    const double first = report_.stop_norms.front();
    report_.converged = norm <= config_.delta * first;
    return report_.converged;
  }

  [[nodiscard]] bool exhausted() const { return report_.iterations >= config_.max_iterations; }

  void require_curvature(double den, double scale, const char* where) {
    if (!(den > 1e-300 * std::max(scale, 1.0))) {
      finish();
      throw SolverError(ErrorCode::kBreakdown,
                        std::string(where) + ": breakdown at iteration " + std::to_string(report_.iterations + 1) +
                            " (curvature " + std::to_string(den) + ")",
                        report_);
    }
  }

  SolveResult done(Vector solution) {
    finish();
    if (!report_.converged) {
      throw SolverError(ErrorCode::kMaxIterations,
                        "no convergence within " + std::to_string(config_.max_iterations) + " iterations",
                        report_);
    }
    return {std::move(solution), report_};
  }

 private:
  void finish() { report_.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count(); }

  const SolverConfig& config_;
  const APreconditioner* ha_;
  Clock::time_point start_;
  SolverReport report_;
};

Vector minus_scaled(const Vector& x, double a, const Vector& y) {
  Vector out = x;
  axpy(-a, y, out);
  return out;
}

SaddleImage minus_scaled(const SaddleImage& x, double a, const SaddleImage& y) {
  SaddleImage out = x;
  out.axpy(-a, y);
  return out;
}

}  // namespace

// --------------------------------------------------------------------------- S_eps

SchurTerm SchurComplement::apply(std::span<const double> p) const {
  const auto n = static_cast<std::size_t>(size());
  require_same_size(p.size(), n, "SchurComplement::apply");
  const InclusionBlocks& blocks = op_->blocks();
  const Vector hbt = ha_->apply(op_->apply_bt(p));
  SchurTerm out = SchurTerm::zeros(n);
  for (int s = 0; s < blocks.count(); ++s) {
    for (int i = blocks.offsets[s]; i < blocks.offsets[s + 1]; ++i) {
      out.bd[i] = blocks.epsilon[s] * p[i] + hbt[i];
    }
  }
  out.q.assign(p.begin(), p.end());
  Vector qpart(n);
  blocks.apply_bd(out.bd, out.value);
  blocks.apply_q(out.q, qpart);
  axpy(1.0, qpart, out.value);
  return out;
}

SchurTerm SchurComplement::rhs(std::span<const double> f) const {
  const auto n = static_cast<std::size_t>(size());
  const Vector hf = ha_->apply(f);
  SchurTerm out = SchurTerm::zeros(n);
  std::copy_n(hf.begin(), n, out.bd.begin());
  op_->blocks().apply_bd(out.bd, out.value);
  return out;
}

// --------------------------------------------------------------------------- norms

double NormEvaluator::a_norm(std::span<const double> v) const {
  const Vector av = op_->stiffness().multiply(v);
  return checked_sqrt(dot(av, v), norm2(av) * norm2(v), "A-norm");
}

double NormEvaluator::s_norm(std::span<const double> p) const {
  const SchurTerm sp = SchurComplement(*op_, h_->ha()).apply(p);
  return checked_sqrt(dot(sp.value, p), norm2(sp.value) * norm2(p), "S-norm");
}

double NormEvaluator::k_norm(std::span<const double> z) const {
  const SaddleImage az = op_->apply_tagged(z);
  const Vector haz = h_->apply(az);
  return checked_sqrt(dot_image(az, haz), norm2(az.flatten()) * norm2(haz), "K-norm");
}

// --------------------------------------------------------------------------- PU

SolveResult pu_solve(const SaddleOperator& op, const SchurPreconditioner& hs, const APreconditioner& ha,
                     std::span<const double> f, std::span<const double> p0, const SolverConfig& config) {
  Run run(config, &ha);
  const auto n = static_cast<std::size_t>(op.inclusion_size());
  require_same_size(f.size(), static_cast<std::size_t>(op.primal_size()), "pu_solve: f");
  require_same_size(p0.size(), n, "pu_solve: p0");
  const SchurComplement schur(op, ha);
  const bool homogeneous = is_zero(f);

  const auto apply_s = [&](std::span<const double> x) {
    run.count_ha();
    return schur.apply(x);
  };
  const auto stop_norm = [&](const Vector& p, const SchurTerm& r, const Vector& z) {
    return homogeneous ? checked_sqrt(dot(p, r.value), norm2(p) * norm2(r.value), "PU norm")
                       : checked_sqrt(dot(r.value, z), norm2(r.value) * norm2(z), "PU norm");
  };

  Vector p(p0.begin(), p0.end());
  SchurTerm r = apply_s(p);  // r = S p - g
  if (!homogeneous) {
    run.count_ha();
    r.axpy(-1.0, schur.rhs(f));
  }
  Vector z = hs.apply(r);
  if (run.record(stop_norm(p, r, z))) return run.done(std::move(p));

  Vector xi = z;
  while (!run.exhausted()) {
    const SchurTerm sxi = apply_s(xi);
    const double den = dot(sxi.value, xi);
    run.require_curvature(den, norm2(sxi.value) * norm2(xi), "PU");
    const double beta = dot(r.value, xi) / den;
    axpy(-beta, xi, p);
    r.axpy(-beta, sxi);
    z = hs.apply(r);
    if (run.record(stop_norm(p, r, z))) break;
    const double alpha = dot(z, sxi.value) / den;
    xpby(z, -alpha, xi);
  }
  return run.done(std::move(p));
}

// --------------------------------------------------------------------------- PL

SolveResult pl_solve(const SaddleOperator& op, const BlockPreconditioner& h, const SaddleImage& rhs,
                     std::span<const double> z0, const SolverConfig& config) {
  Run run(config, &h.ha());
  require_same_size(z0.size(), static_cast<std::size_t>(op.size()), "pl_solve: z0");
  const auto apply_a = [&](std::span<const double> x) {
    run.count_a();
    return op.apply_tagged(x);
  };
  const auto apply_h = [&](const SaddleImage& y) {
    run.count_ha();
    return h.apply(y);
  };

  Vector z(z0.begin(), z0.end());
  SaddleImage r = apply_a(z);  // r = A z - F
  r.axpy(-1.0, rhs);
  Vector s = apply_h(r);  // s = H r
  if (run.record(checked_sqrt(dot_image(r, s), norm2(s) * norm2(r.flatten()), "K-norm"))) {
    return run.done(std::move(z));
  }

  Vector xi = s;
  SaddleImage axi = apply_a(xi);
  Vector haxi = apply_h(axi);
  Vector xi_prev;
  SaddleImage axi_prev;
  Vector haxi_prev;
  double den_prev = 0.0;
  while (!run.exhausted()) {
    const double den = dot_image(axi, haxi);
    run.require_curvature(den, norm2(haxi) * norm2(axi.flatten()), "PL");
    const double beta = dot_image(r, haxi) / den;
    axpy(-beta, xi, z);
    r.axpy(-beta, axi);
    axpy(-beta, haxi, s);
    if (run.record(checked_sqrt(dot_image(r, s), norm2(s) * norm2(r.flatten()), "K-norm"))) break;

    const SaddleImage ahaxi = apply_a(haxi);
    const double alpha = dot_image(ahaxi, haxi) / den;
    Vector xi_next = minus_scaled(haxi, alpha, xi);
    SaddleImage axi_next = minus_scaled(ahaxi, alpha, axi);
    if (!xi_prev.empty()) {
      const double gamma = dot_image(ahaxi, haxi_prev) / den_prev;
      axpy(-gamma, xi_prev, xi_next);
      axi_next.axpy(-gamma, axi_prev);
    }
    xi_prev = std::move(xi);
    axi_prev = std::move(axi);
    haxi_prev = std::move(haxi);
    den_prev = den;
    xi = std::move(xi_next);
    axi = std::move(axi_next);
    haxi = apply_h(axi);
  }
  return run.done(std::move(z));
}

// --------------------------------------------------------------------------- PCG on K

SolveResult pcg_k_solve(const SaddleOperator& op, const BlockPreconditioner& h, const SaddleImage& rhs,
                        std::span<const double> z0, const SolverConfig& config) {
  Run run(config, &h.ha());
  require_same_size(z0.size(), static_cast<std::size_t>(op.size()), "pcg_k_solve: z0");
  const auto apply_a = [&](std::span<const double> x) {
    run.count_a();
    return op.apply_tagged(x);
  };
  const auto apply_h = [&](const SaddleImage& y) {
    run.count_ha();
    return h.apply(y);
  };

  Vector z(z0.begin(), z0.end());
  SaddleImage r = apply_a(z);  // r = A z - F
  r.axpy(-1.0, rhs);
  Vector y = apply_h(r);  // y = H r, so K z - G = A y
  if (run.record(checked_sqrt(dot_image(r, y), norm2(y) * norm2(r.flatten()), "K-norm"))) {
    return run.done(std::move(z));
  }

  SaddleImage rho = apply_a(y);
  Vector t = apply_h(rho);
  Vector xi = t;
  SaddleImage axi = apply_a(t);
  while (!run.exhausted()) {
    const Vector haxi = apply_h(axi);
    const SaddleImage kxi = apply_a(haxi);
    const double den = dot_image(kxi, xi);
    run.require_curvature(den, norm2(xi) * norm2(kxi.flatten()), "PCG-K");
    const double beta = dot_image(rho, xi) / den;
    axpy(-beta, xi, z);
    r.axpy(-beta, axi);
    axpy(-beta, haxi, y);
    rho.axpy(-beta, kxi);
    if (run.record(checked_sqrt(dot_image(r, y), norm2(y) * norm2(r.flatten()), "K-norm"))) break;

    t = apply_h(rho);
    const SaddleImage at = apply_a(t);
    const double alpha = dot_image(kxi, t) / den;
    xpby(t, -alpha, xi);
    axi = minus_scaled(at, alpha, axi);
  }
  return run.done(std::move(z));
}

// --------------------------------------------------------------------------- CG on A

SolveResult cg_basic(const SparseSymMatrix& a, const APreconditioner& ha, std::span<const double> rhs,
                     std::span<const double> x0, double delta, int max_iterations) {
  SolverConfig config;
  config.delta = delta;
  config.max_iterations = max_iterations;
  Run run(config, &ha);
  const auto n = static_cast<std::size_t>(a.dimension());
  require_same_size(rhs.size(), n, "cg_basic: rhs");
  require_same_size(x0.size(), n, "cg_basic: x0");
  const bool homogeneous = is_zero(rhs);
  const auto stop_norm = [&](const Vector& x, const Vector& r, const Vector& z) {
    return homogeneous ? checked_sqrt(dot(x, r), norm2(x) * norm2(r), "A-norm")
                       : checked_sqrt(dot(r, z), norm2(r) * norm2(z), "CG norm");
  };

  Vector x(x0.begin(), x0.end());
  Vector r = a.multiply(x);  // r = A x - b
  run.count_a();
  axpy(-1.0, rhs, r);
  Vector z = ha.apply(r);
  run.count_ha();
  if (run.record(stop_norm(x, r, z))) return run.done(std::move(x));

  Vector p = z;
  Vector ap(n);
  double rz = dot(r, z);
  while (!run.exhausted()) {
    a.multiply(p, ap);
    run.count_a();
    const double den = dot(ap, p);
    run.require_curvature(den, norm2(ap) * norm2(p), "CG");
    const double alpha = rz / den;
    axpy(-alpha, p, x);
    axpy(-alpha, ap, r);
    ha.apply(r, z);
    run.count_ha();
    if (run.record(stop_norm(x, r, z))) break;
    const double rz_next = dot(r, z);
    xpby(z, rz_next / rz, p);
    rz = rz_next;
  }
  return run.done(std::move(x));
}

// --------------------------------------------------------------------------- driver

SolveResult solve_homogeneous(const SaddleProblem& problem, const SolverConfig& config) {
  config.validate();
  const auto ha = make_a_preconditioner(config.ha, problem);
  const SchurPreconditioner hs(problem.blocks());
  const BlockPreconditioner h(*ha, hs);
  const SaddleOperator& op = problem.saddle();
  switch (config.method) {
    case Method::kPu: {
      const Vector f(static_cast<std::size_t>(op.primal_size()), 0.0);
      const Vector p0 = random_initial_guess(static_cast<std::size_t>(op.inclusion_size()), config.seed);
      return pu_solve(op, hs, *ha, f, p0, config);
    }
    case Method::kPl:
    case Method::kPcgK: {
      const Vector z0 = random_initial_guess(static_cast<std::size_t>(op.size()), config.seed);
      const SaddleImage rhs = primal_rhs(Vector(static_cast<std::size_t>(op.primal_size()), 0.0),
                                         op.inclusion_size());
      return config.method == Method::kPl ? pl_solve(op, h, rhs, z0, config)
                                          : pcg_k_solve(op, h, rhs, z0, config);
    }
  }
  throw Error(ErrorCode::kParameter, "unknown method");
}

}  // namespace hcsaddle
