#include "mlr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include "mlr/error.hpp"
#include "mlr/likelihood.hpp"
#include "mlr/parallel.hpp"
#include "mlr/rng.hpp"
#include "mlr/support_design.hpp"

namespace mlr {

double default_penalty_constant(double M) { return 2.0 / l_constant(M); }

double penalty(int K, int R, const PenaltySpec& spec) {
  require(spec.c > 0.0, "penalty constant must be positive");
  if (K == 0 && R == 0) return 0.0;
  require(R >= 1 && R <= K, "penalty needs 1 <= R <= K");
  require(K <= spec.d, "penalty needs K <= d");
  const double k = K;
  return spec.c * k * R + spec.c * k * std::log(spec.d * std::numbers::e / k);
}

double projection_radius(double M) { return M * (1.0 - 1e-9); }

Matrix project_l11_ball(const Matrix& B, double radius) {
  const int K = static_cast<int>(B.rows());
  // weighted upper-triangular vector: diagonal weight 1, off-diagonal weight 2
  std::vector<std::pair<double, double>> items;  // (|value|, weight)
  double l11 = 0.0;
  for (int a = 0; a < K; ++a)
    for (int b = a; b < K; ++b) {
      const double w = a == b ? 1.0 : 2.0;
      items.emplace_back(std::abs(B(a, b)), w);
      l11 += w * std::abs(B(a, b));
    }
  if (l11 <= radius) return B;
  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  double wsum = 0.0, vsum = 0.0, mu = 0.0;
  for (const auto& [u, w] : items) {
    const double cand = (vsum + w * u - radius) / (wsum + w);
    if (u <= cand) break;
    wsum += w;
    vsum += w * u;
    mu = cand;
  }
  Matrix out(K, K);
  for (int a = 0; a < K; ++a)
    for (int b = a; b < K; ++b) {
      const double v = B(a, b);
      const double s = std::max(std::abs(v) - mu, 0.0);
      out(a, b) = out(b, a) = v < 0 ? -s : s;
    }
  return out;
}

Matrix truncate_rank(const Matrix& B, int r) {
  const int K = static_cast<int>(B.rows());
  if (r >= K) return B;
  if (r <= 0) return Matrix::Zero(K, K);
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  std::vector<int> order(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) order[static_cast<std::size_t>(i)] = i;
  const Vector& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(ev(x)) > std::abs(ev(y)); });
  Matrix out = Matrix::Zero(K, K);
  for (int i = 0; i < r; ++i) {
    const int c = order[static_cast<std::size_t>(i)];
    out.noalias() += ev(c) * es.eigenvectors().col(c) * es.eigenvectors().col(c).transpose();
  }
  return 0.5 * (out + out.transpose());
}

namespace {

struct BlockFit {
  Vector theta;
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

double weighted_l1(const Vector& theta, const Vector& w) { return w.cwiseProduct(theta.cwiseAbs()).sum(); }

// Feasible set map: eigen-truncation to rank r, then the l11-ball projection.
// If the ball projection raised the rank, the truncated block is scaled radially instead.
Matrix project_feasible(const Matrix& B, int r, double radius) {
  const int K = static_cast<int>(B.rows());
  const Matrix T = truncate_rank(B, r);
  const Matrix P = project_l11_ball(T, radius);
  if (r >= K || P.isApprox(T, 0.0)) return P;
  const ParameterMatrix check = ParameterMatrix::from_upper_triangle(P);
  if (check.rank() <= r) return P;
  const double l11 = T.cwiseAbs().sum();
  return l11 > radius ? Matrix(T * (radius / l11)) : T;
}

std::optional<BlockFit> newton_fit(const SupportDesign& sd, double radius, int max_iters) {
  const int p = sd.packed_size();
  BlockFit fit;
  fit.theta = Vector::Zero(p);
  Vector g(p);
  double f = sd.objective_and_gradient(fit.theta, g);
  for (int it = 0; it < std::min(max_iters, 200); ++it) {
    Matrix H = sd.hessian(fit.theta);
    const double ridge = 1e-12 * (1.0 + H.diagonal().maxCoeff());
    H.diagonal().array() += ridge;
    const Vector dir = -H.ldlt().solve(g);
    const double decrement = -g.dot(dir);
    fit.iterations = it + 1;
    if (!(decrement >= 0.0) || !dir.allFinite()) return std::nullopt;
    if (decrement < 1e-14 * std::max(1.0, std::abs(f))) {
      fit.converged = true;
      break;
    }
    double step = 1.0;
    Vector cand;
    double fc = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      cand = fit.theta + step * dir;
      fc = sd.objective(cand);
      if (fc <= f - 0.25 * step * decrement) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      fit.converged = decrement < 1e-10 * std::max(1.0, std::abs(f));
      break;
    }
    if (weighted_l1(cand, sd.weights()) > radius) return std::nullopt;
    fit.theta = cand;
    f = sd.objective_and_gradient(fit.theta, g);
  }
  fit.objective = sd.objective(fit.theta);
  if (!fit.converged) return std::nullopt;
  return fit;
}

BlockFit projected_gradient(const SupportDesign& sd, const Matrix& start, int r, double radius, const FitOptions& opts) {
  BlockFit fit;
  Matrix B = project_feasible(start, r, radius);
  Vector theta = sd.from_block(B);
  Vector g(sd.packed_size());
  double f = sd.objective_and_gradient(theta, g);
  const double lip = sd.frobenius_lipschitz();
  if (lip <= 0.0) {
    fit.theta = theta;
    fit.objective = f;
    fit.converged = true;
    return fit;
  }
  const Vector inv_w = sd.weights().cwiseInverse();
  double eta = 1.0 / lip;
  for (int it = 0; it < opts.max_iters; ++it) {
    fit.iterations = it + 1;
    const Matrix G = sd.to_block(g.cwiseProduct(inv_w));
    Matrix Bn;
    Vector theta_n, g_n(sd.packed_size());
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Bn = project_feasible(B - eta * G, r, radius);
      theta_n = sd.from_block(Bn);
      const Matrix D = Bn - B;
      fn = sd.objective_and_gradient(theta_n, g_n);
      const double model = f + G.cwiseProduct(D).sum() + D.squaredNorm() / (2.0 * eta);
      if (fn <= model + 1e-13 * std::max(1.0, std::abs(f))) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      fit.converged = true;  // no descent direction left at machine precision
      break;
    }
    const double decrease = f - fn;
    const bool moved = (Bn - B).squaredNorm() > 0.0;
    B = Bn;
    theta = theta_n;
    g = g_n;
    f = fn;
    if (!moved || decrease <= opts.tol * std::max(1.0, std::abs(f))) {
      fit.converged = true;
      break;
    }
    eta = std::min(eta * 1.5, 64.0 / lip);
  }
  fit.theta = theta;
  fit.objective = f;
  return fit;
}

std::uint64_t support_hash(const IndexSet& s) {
  std::uint64_t h = 0x51ed2701f3a5c7b9ULL;
  for (int a : s) h = splitmix64(h ^ static_cast<std::uint64_t>(a + 1));
  return h;
}

BlockFit fit_block(const SupportDesign& sd, int r, double radius, const FitOptions& opts) {
  const int K = sd.block_size();
  if (r >= K && opts.use_newton) {
    if (auto nf = newton_fit(sd, radius, opts.max_iters)) return *nf;
  }
  BlockFit best;
  const int restarts = r >= K && opts.zero_start ? 1 : std::max(1, opts.n_restarts);
  for (int s = 0; s < restarts; ++s) {
    Matrix start = Matrix::Zero(K, K);
    if (!(s == 0 && opts.zero_start)) {
      Rng rng(derive_seed(opts.seed, support_hash(sd.support()), static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(s)));
      for (int a = 0; a < K; ++a)
        for (int b = a; b < K; ++b) start(a, b) = start(b, a) = rng.normal();
      start *= 0.5 * radius / std::max(start.cwiseAbs().sum(), 1e-300);
    }
    BlockFit cur = projected_gradient(sd, start, r, radius, opts);
    const int total = best.iterations + cur.iterations;
    if (cur.objective < best.objective) best = cur;
    best.iterations = total;
  }
  return best;
}

FitResult finish(const SupportDesign& sd, const BlockFit& bf, int d) {
  FitResult out;
  out.theta_hat = sd.embed(bf.theta, d);
  out.neg_loglik = bf.objective;
  out.objective = bf.objective;
  out.support = sd.support();
  out.rank = out.theta_hat.rank();
  out.iterations = bf.iterations;
  out.converged = bf.converged;
  return out;
}

}  // namespace

FitResult fit_rank_constrained(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                               const IndexSet& support, int r, double M, const FitOptions& opts) {
  require(!support.empty(), "rank-constrained fit needs a nonempty support");
  require(r >= 1, "rank must be at least 1");
  require(r <= static_cast<int>(support.size()), "rank must not exceed the support size");
  require(M > 0.0, "budget M must be positive");
  require(std::is_sorted(support.begin(), support.end()) &&
              std::adjacent_find(support.begin(), support.end()) == support.end(),
          "support must be sorted without duplicates");
  const SupportDesign sd(X, omega, Y, support);
  return finish(sd, fit_block(sd, r, projection_radius(M), opts), X.dim());
}

double penalized_model_count(int d, int k_max, int r_max) {
  double count = 0.0;
  for (int K = 1; K <= k_max; ++K) count += binomial(d, K) * std::min(K, r_max);
  return count;
}

namespace {

struct Candidate {
  double objective = std::numeric_limits<double>::infinity();
  int K = 0;
  int R = 0;
  IndexSet searched;  // support the fit was restricted to
  FitResult fit;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  if (a.K != b.K) return a.K < b.K;
  if (a.R != b.R) return a.R < b.R;
  return a.searched < b.searched;
}

// Best (over R) penalized fit restricted to one support.
Candidate fit_support(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                      const PenaltySpec& spec, double M, int r_max, const FitOptions& opts, const IndexSet& S,
                      int& iterations) {
  const SupportDesign sd(X, omega, Y, S);
  Candidate best;
  for (int R = 1; R <= std::min(sd.block_size(), r_max); ++R) {
    Candidate c;
    c.fit = finish(sd, fit_block(sd, R, projection_radius(M), opts), X.dim());
    iterations += c.fit.iterations;
    c.fit.support = c.fit.theta_hat.support();
    c.K = static_cast<int>(c.fit.support.size());
    c.R = c.fit.rank;
    c.searched = S;
    c.fit.penalty_value = c.K == 0 ? 0.0 : penalty(c.K, std::max(c.R, 1), spec);
    c.fit.objective = c.fit.neg_loglik + c.fit.penalty_value;
    c.objective = c.fit.objective;
    if (better(c, best)) best = std::move(c);
  }
  return best;
}

}  // namespace

FitResult fit_penalized_mle(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                            const PenaltySpec& spec, double M, int k_max, int r_max, const FitOptions& opts) {
  const int d = X.dim();
  require(spec.d == d, "penalty dimension differs from feature dimension");
  require(k_max >= 0 && k_max <= d, "k_max must lie in [0, d]");
  require(r_max >= 1, "r_max must be at least 1");
  const double count = penalized_model_count(d, k_max, r_max);
  if (count > opts.model_budget) throw BudgetExceeded("penalized MLE model count", count, opts.model_budget);

  std::vector<IndexSet> supports;
  for (int K = 1; K <= k_max; ++K) for_each_combination(d, K, [&](const IndexSet& s) { supports.push_back(s); });

  // empty model
  Candidate best;
  {
    const ParameterMatrix zero(d);
    best.fit.theta_hat = zero;
    best.fit.neg_loglik = -log_likelihood(Y, X, zero, omega);
    best.fit.objective = best.fit.neg_loglik;
    best.fit.converged = true;
    best.objective = best.fit.objective;
  }

  // representative[s]: index of the support whose fit stands in for s
  std::vector<std::size_t> representative(supports.size());
  for (std::size_t s = 0; s < supports.size(); ++s) representative[s] = s;
  if (opts.equivalence_key) {
    std::vector<std::uint64_t> keys(supports.size());
    parallel_for(supports.size(), opts.threads, [&](std::size_t s) { keys[s] = opts.equivalence_key(supports[s]); });
    std::map<std::pair<std::size_t, std::uint64_t>, std::size_t> first;
    for (std::size_t s = 0; s < supports.size(); ++s)
      representative[s] = first.try_emplace({supports[s].size(), keys[s]}, s).first->second;
  }
  std::vector<std::size_t> fitted;
  for (std::size_t s = 0; s < supports.size(); ++s)
    if (representative[s] == s) fitted.push_back(s);

  std::vector<Candidate> per_support(supports.size());
  std::vector<int> iterations(supports.size(), 0);
  parallel_for(fitted.size(), opts.threads, [&](std::size_t u) {
    const std::size_t s = fitted[u];
    per_support[s] = fit_support(Y, X, omega, spec, M, r_max, opts, supports[s], iterations[s]);
  });
  long total_iters = 0;
  std::size_t winner = supports.size();
  for (std::size_t s = 0; s < supports.size(); ++s) {
    total_iters += iterations[s];
    Candidate c;
    const Candidate& rep = per_support[representative[s]];
    c.objective = rep.objective;
    c.K = rep.K;
    c.R = rep.R;
    c.searched = supports[s];
    if (better(c, best)) {
      best.objective = c.objective;
      best.K = c.K;
      best.R = c.R;
      best.searched = c.searched;
      winner = s;
    }
  }
  if (winner < supports.size()) {
    if (representative[winner] == winner) {
      best = std::move(per_support[winner]);
    } else {
      int extra = 0;
      best = fit_support(Y, X, omega, spec, M, r_max, opts, supports[winner], extra);
      total_iters += extra;
    }
  }
  FitResult out = std::move(best.fit);
  out.iterations = static_cast<int>(std::min<long>(total_iters, std::numeric_limits<int>::max()));
  out.model_count_searched = static_cast<std::uint64_t>(count);
  return out;
}

double default_lasso_lambda(int d, double c4) { return c4 * std::sqrt(std::log(static_cast<double>(d))); }

namespace {

Vector soft_threshold(const Vector& v, const Vector& thresholds) {
  Vector out(v.size());
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    const double s = std::max(std::abs(v(c)) - thresholds(c), 0.0);
    out(c) = v(c) < 0 ? -s : s;
  }
  return out;
}

// Max over packed coordinates of the optimality violation, in units of lambda.
double packed_kkt(const Vector& theta, const Vector& grad, const Vector& w, double lambda) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < theta.size(); ++c) {
    const double gm = grad(c) / w(c);
    const double v = theta(c) != 0.0 ? std::abs(gm + lambda * (theta(c) > 0 ? 1.0 : -1.0))
                                     : std::max(std::abs(gm) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst / lambda;
}

// Newton refinement on the current active set with signs held fixed.
void polish_active_set(const SupportDesign& sd, Vector& theta, double lambda) {
  const Vector& w = sd.weights();
  std::vector<Eigen::Index> active;
  for (Eigen::Index c = 0; c < theta.size(); ++c)
    if (theta(c) != 0.0) active.push_back(c);
  if (active.empty()) return;
  const auto na = static_cast<Eigen::Index>(active.size());
  Vector sign(na), wa(na);
  for (Eigen::Index i = 0; i < na; ++i) {
    sign(i) = theta(active[static_cast<std::size_t>(i)]) > 0 ? 1.0 : -1.0;
    wa(i) = w(active[static_cast<std::size_t>(i)]);
  }
  auto total = [&](const Vector& th) { return sd.objective(th) + lambda * w.cwiseProduct(th.cwiseAbs()).sum(); };
  Vector g(theta.size());
  for (int it = 0; it < 30; ++it) {
    sd.objective_and_gradient(theta, g);
    const Matrix H = sd.hessian(theta);
    Vector ga(na);
    Matrix Ha(na, na);
    for (Eigen::Index i = 0; i < na; ++i) {
      ga(i) = g(active[static_cast<std::size_t>(i)]) + lambda * wa(i) * sign(i);
      for (Eigen::Index j = 0; j < na; ++j) Ha(i, j) = H(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
    }
    if (ga.norm() < 1e-14 * std::max(1.0, g.norm())) return;
    Ha.diagonal().array() += 1e-14 * (1.0 + Ha.diagonal().maxCoeff());
    const Vector dir = -Ha.ldlt().solve(ga);
    if (!dir.allFinite()) return;
    Vector cand = theta;
    for (Eigen::Index i = 0; i < na; ++i) cand(active[static_cast<std::size_t>(i)]) += dir(i);
    for (Eigen::Index i = 0; i < na; ++i)
      if (cand(active[static_cast<std::size_t>(i)]) * sign(i) <= 0.0) return;  // sign change: leave it to FISTA
    if (total(cand) > total(theta) + 1e-12 * std::max(1.0, std::abs(total(theta)))) return;
    theta = cand;
  }
}

}  // namespace

FitResult fit_lasso(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega, double lambda,
                    const FitOptions& opts) {
  require(lambda > 0.0, "lasso lambda must be positive");
  const int d = X.dim();
  IndexSet all(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) all[static_cast<std::size_t>(a)] = a;
  const SupportDesign sd(X, omega, Y, all);
  const Vector& w = sd.weights();
  const int p = sd.packed_size();
  auto pen = [&](const Vector& th) { return lambda * w.cwiseProduct(th.cwiseAbs()).sum(); };

  FitResult out;
  Vector x = Vector::Zero(p), y = x, gy(p), gx(p);
  double Fx = sd.objective(x);
  out.objective_history.push_back(Fx);
  double L = sd.packed_lipschitz();
  if (L <= 0.0) L = 1.0;
  double t = 1.0;
  for (int it = 0; it < opts.max_iters * 10; ++it) {
    out.iterations = it + 1;
    const double fy = sd.objective_and_gradient(y, gy);
    Vector z;
    double fz = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      z = soft_threshold(y - gy / L, (lambda / L) * w);
      fz = sd.objective(z);
      const Vector dz = z - y;
      if (fz <= fy + gy.dot(dz) + 0.5 * L * dz.squaredNorm() + 1e-13 * std::max(1.0, std::abs(fy))) break;
      L *= 2.0;
    }
    const double Fz = fz + pen(z);
    const Vector x_old = x;
    const double Fold = Fx;
    const bool took_z = Fz <= Fx;
    if (took_z) {
      x = z;
      Fx = Fz;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (!took_z || (y - x).dot(x - x_old) > 0.0) {
      // momentum restart
      t = 1.0;
      y = x;
    } else {
      y = x + (t / t_new) * (z - x) + ((t - 1.0) / t_new) * (x - x_old);
      t = t_new;
    }
    out.objective_history.push_back(Fx);
    const double decrease = Fold - Fx;
    if (decrease <= opts.lasso_tol * std::max(1.0, std::abs(Fx))) {
      sd.objective_and_gradient(x, gx);
      if (packed_kkt(x, gx, w, lambda) <= opts.kkt_tol) {
        out.converged = true;
        break;
      }
      if (it > 50 && decrease <= 0.0 && t == 1.0 && (x - x_old).squaredNorm() == 0.0) {
        // stalled at machine precision
        break;
      }
    }
  }
  if (opts.lasso_polish) {
    Vector polished = x;
    polish_active_set(sd, polished, lambda);
    sd.objective_and_gradient(x, gx);
    const double before = packed_kkt(x, gx, w, lambda);
    Vector gp(p);
    const double fp = sd.objective_and_gradient(polished, gp);
    const double after = packed_kkt(polished, gp, w, lambda);
    if (after < before && fp + pen(polished) <= Fx + 1e-12 * std::max(1.0, std::abs(Fx))) {
      x = polished;
      Fx = std::min(Fx, fp + pen(polished));
      out.objective_history.push_back(Fx);
    }
  }
  sd.objective_and_gradient(x, gx);
  out.kkt_residual = packed_kkt(x, gx, w, lambda);
  if (!out.converged) out.converged = out.kkt_residual <= opts.kkt_tol;
  out.theta_hat = sd.embed(x, d);
  out.neg_loglik = sd.objective(x);
  out.penalty_value = pen(x);
  out.objective = out.neg_loglik + out.penalty_value;
  out.support = out.theta_hat.support();
  out.rank = out.theta_hat.rank();
  return out;
}

double lasso_kkt_residual(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                          const ParameterMatrix& theta, double lambda) {
  const Matrix G = gradient(Y, X, theta, omega);  // gradient of l_Y; the lasso minimises -l_Y
  double worst = 0.0;
  for (int a = 0; a < theta.dim(); ++a)
    for (int b = a; b < theta.dim(); ++b) {
      const double v = theta(a, b);
      const double r = v != 0.0 ? std::abs(-G(a, b) + lambda * (v > 0 ? 1.0 : -1.0)) : std::max(std::abs(G(a, b)) - lambda, 0.0);
      worst = std::max(worst, r);
    }
  return worst / lambda;
}

Prediction predict_probabilities(const ParameterMatrix& theta_hat, const FeatureMatrix& X, const ObservationMask& omega) {
  Prediction p;
  p.affinities = affinity(X, theta_hat, omega).values;
  p.probabilities = edge_probabilities(AffinityMatrix{p.affinities});
  return p;
}

}  // namespace mlr
