#include "hcsaddle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hcsaddle/rng.hpp"

namespace hcsaddle {

namespace {

void require_dense(Eigen::Index dim, int limit, const char* what) {
  if (dim > limit) {
    throw Error(ErrorCode::kParameter, std::string(what) + ": dimension " + std::to_string(dim) +
                                           " exceeds the dense limit " + std::to_string(limit) +
                                           "; use a smaller M or fewer inclusions, or Lanczos extremes");
  }
}

Eigen::VectorXd as_eigen(const Vector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::VectorXd dense_spectrum(const Eigen::MatrixXd& op, const Eigen::MatrixXd& gram, int limit) {
  if (op.rows() != op.cols() || gram.rows() != gram.cols() || op.rows() != gram.rows()) {
    throw Error(ErrorCode::kDimension, "dense_spectrum: operator and Gram matrix shapes differ");
  }
  require_dense(op.rows(), limit, "dense_spectrum");
  const Eigen::MatrixXd g = 0.5 * (gram + gram.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kContract, "dense_spectrum: Gram matrix is not SPD");
  // L^{-1} Op L^{-T}
  Eigen::MatrixXd c = llt.matrixL().solve(0.5 * (op + op.transpose()));
  c = llt.matrixL().solve(c.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

Eigen::MatrixXd to_dense(const SparseSymMatrix& a) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.dimension(), a.dimension());
  for (int r = 0; r < a.dimension(); ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) out(r, a.col_idx()[k]) = a.values()[k];
  }
  return out;
}

Eigen::MatrixXd dense_saddle(const SaddleOperator& op) {
  const int dim = op.size();
  Eigen::MatrixXd out(dim, dim);
  Vector e(static_cast<std::size_t>(dim), 0.0);
  for (int j = 0; j < dim; ++j) {
    e[j] = 1.0;
    out.col(j) = as_eigen(op.apply(e));
    e[j] = 0.0;
  }
  return out;
}

Eigen::MatrixXd dense_bd(const InclusionBlocks& blocks) {
  const int n = blocks.total_size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < blocks.count(); ++s) {
    out.block(blocks.offsets[s], blocks.offsets[s], blocks.stiffness[s].dimension(), blocks.stiffness[s].dimension()) =
        to_dense(blocks.stiffness[s]);
  }
  return out;
}

Eigen::MatrixXd dense_q(const InclusionBlocks& blocks) {
  const int n = blocks.total_size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < blocks.count(); ++s) {
    const Eigen::VectorXd m = as_eigen(blocks.rank_one[s].mass_weights);
    out.block(blocks.offsets[s], blocks.offsets[s], m.size(), m.size()) = m * m.transpose() / blocks.rank_one[s].side_sq();
  }
  return out;
}

Eigen::MatrixXd dense_mass(const InclusionBlocks& blocks) {
  const int n = blocks.total_size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < blocks.count(); ++s) {
    out.block(blocks.offsets[s], blocks.offsets[s], blocks.mass[s].dimension(), blocks.mass[s].dimension()) =
        to_dense(blocks.mass[s]);
  }
  return out;
}

Eigen::MatrixXd dense_s0(const SparseSymMatrix& a, const InclusionBlocks& blocks) {
  const int n = blocks.total_size();
  const auto exact = make_exact_a(a);
  const Eigen::MatrixXd bd = dense_bd(blocks);
  // X = (A^{-1})_{DD} B_D, column by column
  Eigen::MatrixXd x(n, n);
  Vector rhs(static_cast<std::size_t>(a.dimension()), 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) rhs[i] = bd(i, j);
    const Vector sol = exact->apply(rhs);
    for (int i = 0; i < n; ++i) x(i, j) = sol[i];
  }
  const Eigen::MatrixXd s0 = bd * x;
  return 0.5 * (s0 + s0.transpose());
}

Eigen::MatrixXd dense_ha(const APreconditioner& ha, int size) {
  Eigen::MatrixXd out(size, size);
  Vector e(static_cast<std::size_t>(size), 0.0);
  for (int j = 0; j < size; ++j) {
    e[j] = 1.0;
    out.col(j) = as_eigen(ha.apply(e));
    e[j] = 0.0;
  }
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd dense_h_inverse(const Eigen::MatrixXd& ha_inverse, const InclusionBlocks& blocks) {
  const auto N = ha_inverse.rows();
  const int n = blocks.total_size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N + n, N + n);
  out.topLeftCorner(N, N) = ha_inverse;
  out.bottomRightCorner(n, n) = dense_bd(blocks) + dense_q(blocks);
  return out;
}

Eigen::MatrixXd dense_h0_inverse(const SparseSymMatrix& a, const InclusionBlocks& blocks) {
  const int N = a.dimension();
  const int n = blocks.total_size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N + n, N + n);
  out.topLeftCorner(N, N) = to_dense(a);
  out.bottomRightCorner(n, n) = dense_s0(a, blocks) + dense_q(blocks);
  return out;
}

Eigen::MatrixXd mean_free_basis(const InclusionBlocks& blocks) {
  const int n = blocks.total_size();
  const int m = blocks.count();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n - m);
  int col = 0;
  for (int s = 0; s < m; ++s) {
    const Eigen::VectorXd ms = as_eigen(blocks.rank_one[s].mass_weights);
    const auto n_s = ms.size();
    const Eigen::MatrixXd ms_col = ms;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ms_col);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n_s, n_s);
    z.block(blocks.offsets[s], col, n_s, n_s - 1) = q.rightCols(n_s - 1);
    col += static_cast<int>(n_s) - 1;
  }
  return z;
}

double condition_number(const SparseSymMatrix& a, int limit) {
  require_dense(a.dimension(), limit, "condition_number");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_dense(a), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 0.0)) throw Error(ErrorCode::kContract, "condition_number: matrix is not positive definite");
  return eig.eigenvalues().maxCoeff() / lo;
}

LanczosResult lanczos_extremes(const LinearMap& op, const LinearMap& gram, std::size_t size, int budget,
                               double tolerance, std::uint64_t seed) {
  if (budget < 1 || size == 0) throw Error(ErrorCode::kParameter, "lanczos_extremes: empty problem or budget");
  CounterRng rng(seed, 4);
  Vector q(size);
  for (double& v : q) v = rng.uniform(-1.0, 1.0);
  Vector gq = gram(q);
  const double q_norm = std::sqrt(dot(q, gq));
  scale(1.0 / q_norm, q);
  scale(1.0 / q_norm, gq);

  std::vector<Vector> basis;
  std::vector<Vector> gbasis;
  std::vector<double> alpha;
  std::vector<double> beta;
  LanczosResult result;
  const int steps = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(budget), size));
  for (int j = 0; j < steps; ++j) {
    basis.push_back(q);
    gbasis.push_back(gq);
    Vector w = op(q);
    alpha.push_back(dot(w, gq));
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < basis.size(); ++i) axpy(-dot(w, gbasis[i]), basis[i], w);
    }
    Vector gw = gram(w);
    const double b = std::sqrt(std::max(dot(w, gw), 0.0));

    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    result.lambda_min = eig.eigenvalues()(0);
    result.lambda_max = eig.eigenvalues()(k - 1);
    result.residual_min = b * std::abs(eig.eigenvectors()(k - 1, 0));
    result.residual_max = b * std::abs(eig.eigenvectors()(k - 1, k - 1));
    result.steps = j + 1;

    const double scale_ref = std::max({1.0, std::abs(result.lambda_min), std::abs(result.lambda_max)});
    if (b <= 1e-14 * scale_ref ||
        (result.residual_min <= tolerance * scale_ref && result.residual_max <= tolerance * scale_ref)) {
      result.converged = true;
      break;
    }
    beta.push_back(b);
    scale(1.0 / b, w);
    scale(1.0 / b, gw);
    q = std::move(w);
    gq = std::move(gw);
  }
  return result;
}

A0B0 measure_a0_b0(const SparseSymMatrix& a, const InclusionBlocks& blocks) {
  const Eigen::MatrixXd z = mean_free_basis(blocks);
  const Eigen::MatrixXd s0 = z.transpose() * dense_s0(a, blocks) * z;
  const Eigen::MatrixXd bd = z.transpose() * dense_bd(blocks) * z;
  const Eigen::VectorXd mu = dense_spectrum(s0, bd);
  return {mu.minCoeff(), mu.maxCoeff()};
}

BetaBounds measure_beta(const SparseSymMatrix& a, const APreconditioner& ha) {
  require_dense(a.dimension(), kDenseLimit, "measure_beta");
  const Eigen::MatrixXd ad = to_dense(a);
  const Eigen::MatrixXd hd = dense_ha(ha, a.dimension());
  // Eigenvalues of H_A A are 1/beta.
  Eigen::LLT<Eigen::MatrixXd> llt(ad);
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd c = l.transpose() * hd * l;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  return {1.0 / eig.eigenvalues().maxCoeff(), 1.0 / eig.eigenvalues().minCoeff()};
}

double mu_hat(int which) {
  const double root = std::sqrt(5.0);
  return which == 1 ? 0.5 * (1.0 - root) : 0.5 * (1.0 + root);
}

double mu_check(int which, double r_max) {
  const double root = std::sqrt((1.0 - r_max) * (1.0 - r_max) + 4.0 * (1.0 + r_max));
  return which == 1 ? 0.5 * (1.0 - r_max - root) : 0.5 * (1.0 - r_max + root);
}

IntervalConstants interval_constants(double a0, double b0, double eps_max, BetaBounds beta) {
  if (!(a0 > 0.0)) throw Error(ErrorCode::kParameter, "interval_constants: a0 must be positive");
  IntervalConstants c;
  c.a0 = a0;
  c.b0 = b0;
  c.eps_max = eps_max;
  c.r_max = eps_max / a0;
  c.mu_hat1 = mu_hat(1);
  c.mu_hat2 = mu_hat(2);
  c.mu_check1 = mu_check(1, c.r_max);
  c.mu_check2 = mu_check(2, c.r_max);
  c.beta1 = beta.beta1;
  c.beta2 = beta.beta2;
  // B_D + Q is bounded below by S_0 + Q and above by (1/a0)(S_0 + Q) on the
  // complement, so these bracket H^{-1} between multiples of H_0^{-1}.
  c.alpha_min = std::min(beta.beta1, 1.0);
  c.alpha_max = std::max(beta.beta2, 1.0 / a0);
  c.c1 = c.mu_check1 / c.alpha_min;
  c.c2 = c.mu_hat1 / c.alpha_max;
  c.c3 = 1.0 / c.alpha_max;
  c.c4 = c.mu_hat2 / c.alpha_min;
  return c;
}

PencilCheck check_pencil(std::string name, const Eigen::VectorXd& eigenvalues, double lo1, double hi1, double lo2,
                         double hi2, double tolerance) {
  PencilCheck check;
  check.name = std::move(name);
  check.lo1 = lo1;
  check.hi1 = hi1;
  check.lo2 = lo2;
  check.hi2 = hi2;
  check.eigenvalues.assign(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  const auto distance = [](double x, double lo, double hi) { return x < lo ? lo - x : (x > hi ? x - hi : 0.0); };
  for (double mu : check.eigenvalues) {
    const double excess = std::min(distance(mu, lo1, hi1), distance(mu, lo2, hi2));
    check.worst_excess = std::max(check.worst_excess, excess);
    if (excess > tolerance) ++check.outside;
  }
  check.pass = check.outside == 0;
  return check;
}

namespace {

double split_error(const Eigen::VectorXd& full, const Eigen::VectorXd& restricted, int kernel) {
  if (full.size() != restricted.size() + kernel) return std::numeric_limits<double>::infinity();
  std::vector<double> expected(restricted.data(), restricted.data() + restricted.size());
  expected.insert(expected.end(), static_cast<std::size_t>(kernel), -1.0);
  std::sort(expected.begin(), expected.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    worst = std::max(worst, std::abs(full(static_cast<Eigen::Index>(i)) - expected[i]));
  }
  return worst;
}

}  // namespace

SpectrumReport verify_intervals(const SaddleProblem& problem, const SpectrumOptions& options) {
  const InclusionBlocks& blocks = problem.blocks();
  const SparseSymMatrix& a = problem.stiffness();
  const int N = problem.primal_size();
  const int n = problem.inclusion_size();
  require_dense(N + n, options.limit, "verify_intervals");
  if (blocks.count() == 0) throw Error(ErrorCode::kParameter, "verify_intervals: layout has no inclusions");

  const A0B0 ab = measure_a0_b0(a, blocks);
  const Eigen::MatrixXd ad = to_dense(a);
  BetaBounds beta;
  Eigen::MatrixXd ha_inverse = ad;
  if (options.ha.kind != AKind::kExact) {
    const auto ha = make_a_preconditioner(options.ha, problem);
    beta = measure_beta(a, *ha);
    const Eigen::MatrixXd hd = dense_ha(*ha, N);
    ha_inverse = hd.llt().solve(Eigen::MatrixXd::Identity(N, N));
    ha_inverse = 0.5 * (ha_inverse + ha_inverse.transpose());
  }
  const double eps_max = *std::max_element(blocks.epsilon.begin(), blocks.epsilon.end());

  SpectrumReport report;
  report.constants = interval_constants(ab.a0, ab.b0, eps_max, beta);
  report.inclusions = blocks.count();
  report.tolerance = options.tolerance;
  const IntervalConstants& c = report.constants;

  const Eigen::MatrixXd aeps = dense_saddle(problem.saddle());
  const Eigen::MatrixXd hinv = dense_h_inverse(ha_inverse, blocks);
  const Eigen::MatrixXd h0inv = dense_h0_inverse(a, blocks);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N + n, N + n - blocks.count());
  w.topLeftCorner(N, N).setIdentity();
  w.bottomRightCorner(n, n - blocks.count()) = mean_free_basis(blocks);

  const Eigen::VectorXd full_practical = dense_spectrum(aeps, hinv, options.limit);
  const Eigen::VectorXd full_h0 = dense_spectrum(aeps, h0inv, options.limit);
  const Eigen::MatrixXd aeps_r = w.transpose() * aeps * w;
  const Eigen::VectorXd res_practical = dense_spectrum(aeps_r, w.transpose() * hinv * w, options.limit);
  const Eigen::VectorXd res_h0 = dense_spectrum(aeps_r, w.transpose() * h0inv * w, options.limit);

  const double tol = options.tolerance;
  report.practical_full = check_pencil("H A_eps", full_practical, c.mu_check1, c.mu_hat1, 1.0, c.mu_hat2, tol);
  report.h0_full = check_pencil("H0 A_eps", full_h0, c.mu_check1, c.mu_hat1, 1.0, c.mu_hat2, tol);
  report.h0_restricted =
      check_pencil("H0 A_eps (mean-free)", res_h0, c.mu_check1, c.mu_hat1, 1.0, c.mu_hat2, tol);
  report.practical_restricted = check_pencil("H A_eps (mean-free)", res_practical, c.c1, c.c2, c.c3, c.c4, tol);
  report.kernel_split_error = std::max(split_error(full_practical, res_practical, blocks.count()),
                                       split_error(full_h0, res_h0, blocks.count()));
  report.kernel_pass = report.kernel_split_error <= tol;
  return report;
}

}  // namespace hcsaddle
