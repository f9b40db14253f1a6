#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mcpd {

// Bayesian online changepoint detection with a constant hazard and an
// independent Normal-Inverse-Gamma observation model per dimension. The
// run-length posterior is maintained in log space; each observed vector
// yields the probability that a change occurred at that step, which the
// pipeline converts into per-period attention weights.

// Conjugate sufficient statistics, one entry per data dimension.
struct NigParams {
    Eigen::VectorXd mu;     // location
    Eigen::VectorXd kappa;  // location pseudo-count, > 0
    Eigen::VectorXd alpha;  // shape, > 0.5 so the predictive has nu > 1
    Eigen::VectorXd beta;   // scale, > 0

    Eigen::Index dim() const { return mu.size(); }
};

// Broadcasts one scalar prior to every dimension.
NigParams make_prior(Eigen::Index dim, double mu0 = 0.0, double kappa0 = 1.0,
                     double alpha0 = 1.0, double beta0 = 1.0);

struct CpdConfig {
    double hazard_lambda = 10.0;  // hazard = 1/lambda, must be > 1
    double prior_mu = 0.0;
    double prior_kappa = 1.0;
    double prior_alpha = 1.0;
    double prior_beta = 1.0;
    int max_run = 0;  // 0: unbounded (effectively the sequence length)

    double hazard() const { return 1.0 / hazard_lambda; }
    NigParams prior(Eigen::Index dim) const {
        return make_prior(dim, prior_mu, prior_kappa, prior_alpha, prior_beta);
    }
};

void validate(const CpdConfig& config);

// Posterior over run lengths 0..min(t, max_run) after t observations.
// stats[r] holds the conjugate statistics of the hypothesis that the current
// run has length r; when max_run caps the vector, the last entry aggregates
// every longer run.
struct RunLengthState {
    int t = 0;
    Eigen::VectorXd weights;       // sums to 1 within 1e-12, all >= 0
    std::vector<NigParams> stats;  // one per run-length hypothesis
};

RunLengthState initial_state(Eigen::Index dim, const CpdConfig& config);

// Sum over dimensions of the log density of the posterior-predictive
// Student-t (nu = 2*alpha, location mu, squared scale beta*(kappa+1)/(alpha*kappa))
// evaluated at x.
double predictive_logpdf(const Eigen::VectorXd& x, const NigParams& params);

// One-observation conjugate update, applied per dimension.
NigParams posterior_update(const NigParams& params, const Eigen::VectorXd& x);

// Advances the run-length posterior by one observation. A run of length r
// grows to r+1 with mass w_r * pred_r(x) * (1-H) and updated statistics; the
// change hypothesis receives mass H * pred_prior(x) at run length 0 with
// prior statistics (the new segment's accumulation starts at the next
// observation). Weights are renormalized; mass past max_run is merged into
// the longest retained run.
RunLengthState bocpd_step(const RunLengthState& state, const Eigen::VectorXd& x,
                          const CpdConfig& config);

// Per-period change probabilities and the attention weights derived from
// them.
struct ChangeScores {
    Eigen::VectorXd probs;    // P(run length = 0) after each observation, in [0,1]
    Eigen::VectorXd weights;  // finite, >= 0
};

// probs[t] = P(run length = 0 | x_1..x_{t+1}), iterating bocpd_step from the
// initial state.
Eigen::VectorXd changepoint_probabilities(const std::vector<Eigen::VectorXd>& series,
                                          const CpdConfig& config);

enum class WeightMode { affine, direct, softmax };

WeightMode weight_mode_from_string(const std::string& s);
const char* to_string(WeightMode mode);

// affine:  w_t = 1 + gamma * p_t          (gamma = 0 recovers the ablation)
// direct:  w_t = p_t
// softmax: w_t = T * softmax(p / temperature)_t, mean weight exactly 1
Eigen::VectorXd attention_weights(const Eigen::VectorXd& probs, WeightMode mode, double gamma,
                                  double temperature);

}  // namespace mcpd
