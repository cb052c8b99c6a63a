#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pollerr/errors.hpp"

namespace pollerr::oracle {

struct GaussianPosterior {
  double mean = 0.0;
  double variance = 0.0;
  double sd() const;
};

// Marginal covariance of the polls of one contest under the random-walk
// model with the binomial term suppressed:
//   Sigma_ij = tau^2 * 1{i=j} + gamma^2 * min(t_i, t_j).
struct MarginalCov {
  Eigen::MatrixXd sigma;
};

// Cholesky with a jitter ladder (adds 1e-12, 1e-10, 1e-8 to the diagonal
// before giving up). Throws IllConditionedError with a condition estimate.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m);

// Conjugate posterior of alpha under the Static model, binomial variance
// suppressed: precision n_r/tau^2 from the data, sigma_alpha^{-2} from the
// prior. Throws InvalidPollError on empty ys, IllConditionedError on tau==0.
GaussianPosterior static_alpha_posterior(const std::vector<double>& ys,
                                         double v, double tau,
                                         double mu_alpha, double sigma_alpha);

struct PollWeight {
  double w = 0.0;       // weight on the observed error y - v
  double lambda = 0.0;  // posterior precision
};

// Single-poll posterior weights under the random-walk model:
//   lambda = (tau^2 + t*gamma^2)^{-1} + sigma_alpha^{-2},
//   w      = (tau^2 + t*gamma^2)^{-1} / lambda.
PollWeight single_poll_weight(int t, double tau, double gamma,
                              double sigma_alpha);

MarginalCov rw_marginal_cov(const std::vector<int>& ts, double tau,
                            double gamma);

// Flat-prior posterior of alpha with theta integrated out:
//   mean = (Y - v1)' Sigma^{-1} 1 / (1' Sigma^{-1} 1),
//   var  = (1' Sigma^{-1} 1)^{-1}.
GaussianPosterior rw_alpha_posterior_flat(const std::vector<double>& ys,
                                          const std::vector<int>& ts, double v,
                                          double tau, double gamma);

// Multivariate normal log density of Y at mean (v + alpha) * 1 and
// covariance Sigma, optionally plus the observed-share binomial diagonal.
double rw_marginal_loglik(const std::vector<double>& ys,
                          const std::vector<int>& ts, double v, double alpha,
                          double tau, double gamma,
                          const std::vector<long long>& ns, bool plug_in);

}  // namespace pollerr::oracle
