#include "pollerr/oracle.hpp"

#include <cmath>

#include "pollerr/math.hpp"

namespace pollerr::oracle {

double GaussianPosterior::sd() const { return std::sqrt(variance); }

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m) {
  static const double jitters[] = {0.0, 1e-12, 1e-10, 1e-8};
  for (double j : jitters) {
    Eigen::MatrixXd work = m;
    if (j > 0.0)
      work.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      const auto d = llt.matrixLLT().diagonal();
      if (d.allFinite() && d.minCoeff() > 0.0) return llt;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  const auto d = llt.matrixLLT().diagonal().array().abs();
  const double dmax = d.maxCoeff();
  const double dmin = d.minCoeff();
  const double cond_est = dmin > 0.0 ? (dmax / dmin) * (dmax / dmin)
                                     : std::numeric_limits<double>::infinity();
  throw IllConditionedError(
      "SPD factorization failed after jitter ladder; condition estimate " +
      std::to_string(cond_est));
}

GaussianPosterior static_alpha_posterior(const std::vector<double>& ys,
                                         double v, double tau, double mu_alpha,
                                         double sigma_alpha) {
  if (ys.empty())
    throw InvalidPollError("static_alpha_posterior: no polls");
  if (!(tau > 0.0))
    throw IllConditionedError("static_alpha_posterior: tau must be positive");
  const double n_r = static_cast<double>(ys.size());
  double mean_err = 0.0;
  for (double y : ys) mean_err += y - v;
  mean_err /= n_r;

  const double data_prec = n_r / (tau * tau);
  const double prior_prec = 1.0 / (sigma_alpha * sigma_alpha);
  GaussianPosterior post;
  post.variance = 1.0 / (data_prec + prior_prec);
  post.mean = (data_prec * mean_err + prior_prec * mu_alpha) * post.variance;
  return post;
}

PollWeight single_poll_weight(int t, double tau, double gamma,
                              double sigma_alpha) {
  const double marginal_var = tau * tau + t * gamma * gamma;
  if (!(marginal_var > 0.0))
    throw IllConditionedError("single_poll_weight: tau^2 + t*gamma^2 == 0");
  PollWeight pw;
  const double data_prec = 1.0 / marginal_var;
  pw.lambda = data_prec + 1.0 / (sigma_alpha * sigma_alpha);
  pw.w = data_prec / pw.lambda;
  return pw;
}

MarginalCov rw_marginal_cov(const std::vector<int>& ts, double tau,
                            double gamma) {
  const auto k = static_cast<Eigen::Index>(ts.size());
  MarginalCov cov;
  cov.sigma.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      double s = gamma * gamma * std::min(ts[i], ts[j]);
      if (i == j) s += tau * tau;
      cov.sigma(i, j) = s;
    }
  return cov;
}

GaussianPosterior rw_alpha_posterior_flat(const std::vector<double>& ys,
                                          const std::vector<int>& ts, double v,
                                          double tau, double gamma) {
  if (ys.size() != ts.size() || ys.empty())
    throw InvalidPollError("rw_alpha_posterior_flat: bad poll vectors");
  const auto sigma = rw_marginal_cov(ts, tau, gamma).sigma;
  const auto llt = factor_spd(sigma);

  const auto k = static_cast<Eigen::Index>(ys.size());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
  Eigen::VectorXd err(k);
  for (Eigen::Index i = 0; i < k; ++i) err(i) = ys[i] - v;

  const Eigen::VectorXd sinv_ones = llt.solve(ones);
  const double denom = ones.dot(sinv_ones);
  GaussianPosterior post;
  post.mean = err.dot(sinv_ones) / denom;
  post.variance = 1.0 / denom;
  return post;
}

double rw_marginal_loglik(const std::vector<double>& ys,
                          const std::vector<int>& ts, double v, double alpha,
                          double tau, double gamma,
                          const std::vector<long long>& ns, bool plug_in) {
  if (ys.size() != ts.size() || ys.empty())
    throw InvalidPollError("rw_marginal_loglik: bad poll vectors");
  Eigen::MatrixXd sigma = rw_marginal_cov(ts, tau, gamma).sigma;
  if (plug_in) {
    if (ns.size() != ys.size())
      throw InvalidPollError("rw_marginal_loglik: ns size mismatch");
    for (Eigen::Index i = 0; i < sigma.rows(); ++i)
      sigma(i, i) += ys[i] * (1.0 - ys[i]) / static_cast<double>(ns[i]);
  }
  const auto llt = factor_spd(sigma);

  const auto k = static_cast<Eigen::Index>(ys.size());
  Eigen::VectorXd resid(k);
  for (Eigen::Index i = 0; i < k; ++i) resid(i) = ys[i] - (v + alpha);

  double log_det = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  const double quad = resid.dot(llt.solve(resid));
  return -0.5 * (k * log_2pi + log_det + quad);
}

}  // namespace pollerr::oracle
