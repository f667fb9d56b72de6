#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/rng.hpp"

namespace gripforge {

/// Strategy constants of CMA-ES (population size, recombination weights,
/// path/covariance learning rates). default_params(n) fills them with the
/// standard formulas.
struct CmaParams {
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;  // mu entries, positive, sum to 1
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;  // E|N(0,I)|
};

inline CmaParams default_params(int n) {
  if (n < 1) throw InvalidDimensions("default_params: n >= 1 required");
  CmaParams p;
  p.lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
  p.mu = p.lambda / 2;
  p.weights.resize(p.mu);
  for (int i = 0; i < p.mu; ++i) {
    p.weights[i] = std::log((p.lambda + 1) / 2.0) - std::log(i + 1.0);
  }
  p.weights /= p.weights.sum();
  p.mu_eff = 1.0 / p.weights.squaredNorm();
  p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
  p.d_sigma = 1.0 +
              2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) +
              p.c_sigma;
  p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
  p.c_mu = std::min(1.0 - p.c_1,
                    2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) /
                        ((n + 2.0) * (n + 2.0) + p.mu_eff));
  p.chi_n = std::sqrt(static_cast<double>(n)) *
            (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return p;
}

struct Budget {
  long max_evaluations = 0;
  std::optional<double> target_fitness;
  int stagnation_generations = 0;  // 0 disables the check
};

/// Full optimizer state; exposed for the invariant tests.
struct CmaState {
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd C;
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;
  long generation = 0;
  long evaluations = 0;
};

/// Box bounds handled by resampling (up to 10 tries), then coordinate-wise
/// clamping with a quadratic fitness penalty on the clamped distance.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double penalty_weight = 1e3;
};

class CmaEs {
 public:
  CmaEs(Eigen::VectorXd mean0, double sigma0,
        CmaParams params = CmaParams(),
        std::optional<BoxBounds> bounds = std::nullopt)
      : n_(static_cast<int>(mean0.size())),
        params_(params.lambda > 0 ? params : default_params(static_cast<int>(mean0.size()))),
        bounds_(std::move(bounds)) {
    state_.mean = std::move(mean0);
    state_.sigma = sigma0;
    state_.C = Eigen::MatrixXd::Identity(n_, n_);
    state_.p_sigma = Eigen::VectorXd::Zero(n_);
    state_.p_c = Eigen::VectorXd::Zero(n_);
    refresh_eigen();
  }

  const CmaState& state() const { return state_; }
  const CmaParams& params() const { return params_; }
  int dimension() const { return n_; }
  double best_fitness() const { return best_fitness_; }
  const Eigen::VectorXd& best_candidate() const { return best_x_; }
  bool has_best() const { return best_fitness_ < std::numeric_limits<double>::infinity(); }

  /// Sample lambda candidates: m + sigma * C^{1/2} z.
  std::vector<Eigen::VectorXd> ask(Rng& rng) {
    if (eigen_dirty_) refresh_eigen();
    last_ask_.resize(params_.lambda);
    last_penalty_.assign(params_.lambda, 0.0);
    for (int k = 0; k < params_.lambda; ++k) {
      Eigen::VectorXd x = sample(rng);
      if (bounds_ && !inside(x)) {
        for (int attempt = 0; attempt < 10 && !inside(x); ++attempt) {
          x = sample(rng);
        }
        if (!inside(x)) {
          Eigen::VectorXd clamped =
              x.cwiseMax(bounds_->lower).cwiseMin(bounds_->upper);
          last_penalty_[k] =
              bounds_->penalty_weight * (x - clamped).squaredNorm();
          x = clamped;
        }
      }
      last_ask_[k] = std::move(x);
    }
    return last_ask_;
  }

  /// Rank-based update. Non-finite fitnesses rank worst; candidates that do
  /// not match the ask() output (injected by the caller) carry no bound
  /// penalty. Set minimize = false to maximize.
  void tell(const std::vector<Eigen::VectorXd>& candidates,
            std::vector<double> fitnesses, bool minimize = true) {
    const int lam = params_.lambda;
    if (static_cast<int>(candidates.size()) != lam ||
        fitnesses.size() != candidates.size()) {
      throw LengthMismatch("tell: candidate/fitness count must equal lambda");
    }
    if (!minimize) {
      for (double& f : fitnesses) f = -f;
    }
    for (int k = 0; k < lam; ++k) {
      if (!std::isfinite(fitnesses[k])) {
        fitnesses[k] = std::numeric_limits<double>::infinity();
        continue;
      }
      if (k < static_cast<int>(last_ask_.size()) && last_penalty_[k] != 0.0 &&
          candidates[k] == last_ask_[k]) {
        fitnesses[k] += last_penalty_[k];
      }
      if (fitnesses[k] < best_fitness_) {
        best_fitness_ = fitnesses[k];
        best_x_ = candidates[k];
      }
    }

    std::vector<int> order(lam);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (fitnesses[a] != fitnesses[b]) return fitnesses[a] < fitnesses[b];
      return a < b;
    });

    const Eigen::VectorXd m_old = state_.mean;
    Eigen::VectorXd m_new = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < params_.mu; ++i) {
      m_new += params_.weights[i] * candidates[order[i]];
    }

    Eigen::VectorXd mean_step = (m_new - m_old) / state_.sigma;
    Eigen::VectorXd c_inv_sqrt_step = inv_sqrt_apply(mean_step);

    state_.p_sigma = (1.0 - params_.c_sigma) * state_.p_sigma +
                     std::sqrt(params_.c_sigma * (2.0 - params_.c_sigma) *
                               params_.mu_eff) *
                         c_inv_sqrt_step;

    double ps_norm = state_.p_sigma.norm();
    double decay = 1.0 - std::pow(1.0 - params_.c_sigma,
                                  2.0 * (state_.generation + 1));
    bool h_sigma = ps_norm / std::sqrt(decay) <
                   (1.4 + 2.0 / (n_ + 1.0)) * params_.chi_n;

    state_.p_c = (1.0 - params_.c_c) * state_.p_c;
    if (h_sigma) {
      state_.p_c += std::sqrt(params_.c_c * (2.0 - params_.c_c) *
                              params_.mu_eff) *
                    mean_step;
    }

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < params_.mu; ++i) {
      Eigen::VectorXd y = (candidates[order[i]] - m_old) / state_.sigma;
      rank_mu.noalias() += params_.weights[i] * y * y.transpose();
    }

    double c1a = params_.c_1 * (1.0 - (h_sigma ? 0.0 : 1.0) * params_.c_c *
                                          (2.0 - params_.c_c));
    state_.C = (1.0 - c1a - params_.c_mu) * state_.C +
               params_.c_1 * (state_.p_c * state_.p_c.transpose()) +
               params_.c_mu * rank_mu;
    state_.C = 0.5 * (state_.C + state_.C.transpose());  // keep symmetric

    double exponent = params_.c_sigma / params_.d_sigma *
                      (ps_norm / params_.chi_n - 1.0);
    state_.sigma *= std::exp(std::min(exponent, 1.0));

    state_.mean = m_new;
    state_.generation += 1;
    state_.evaluations += lam;
    eigen_dirty_ = true;
  }

 private:
  Eigen::VectorXd sample(Rng& rng) {
    Eigen::VectorXd z(n_);
    for (int i = 0; i < n_; ++i) z[i] = rng.normal();
    return state_.mean + state_.sigma * (eig_b_ * (eig_d_.asDiagonal() * z));
  }

  bool inside(const Eigen::VectorXd& x) const {
    return (x.array() >= bounds_->lower.array()).all() &&
           (x.array() <= bounds_->upper.array()).all();
  }

  Eigen::VectorXd inv_sqrt_apply(const Eigen::VectorXd& v) const {
    return eig_b_ * (eig_d_.cwiseInverse().asDiagonal() * (eig_b_.transpose() * v));
  }

  void refresh_eigen() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state_.C);
    Eigen::VectorXd vals = es.eigenvalues();
    double vmax = std::max(vals.maxCoeff(), 1e-300);
    for (int i = 0; i < n_; ++i) {
      if (!(vals[i] > 0.0)) vals[i] = 1e-14 * vmax;  // repair numerical drift
    }
    eig_b_ = es.eigenvectors();
    eig_d_ = vals.cwiseSqrt();
    eigen_dirty_ = false;
  }

  int n_;
  CmaParams params_;
  std::optional<BoxBounds> bounds_;
  CmaState state_;
  Eigen::MatrixXd eig_b_;
  Eigen::VectorXd eig_d_;
  bool eigen_dirty_ = true;

  std::vector<Eigen::VectorXd> last_ask_;
  std::vector<double> last_penalty_;

  double best_fitness_ = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x_;
};

}  // namespace gripforge
