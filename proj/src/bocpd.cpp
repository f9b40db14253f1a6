#include "mcpd/bocpd.hpp"

#include "mcpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcpd {

namespace {

constexpr double kHalfLogPi = 0.5723649429247001;  // log(pi)/2

void check_dim(const Eigen::VectorXd& x, const NigParams& params) {
    if (x.size() != params.dim()) {
        throw ArgumentError("observation dimension " + std::to_string(x.size()) +
                            " does not match model dimension " + std::to_string(params.dim()));
    }
    if (!x.allFinite()) {
        throw ArgumentError("observation contains a non-finite value");
    }
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) {
        return m;
    }
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

NigParams make_prior(Eigen::Index dim, double mu0, double kappa0, double alpha0, double beta0) {
    NigParams p;
    p.mu = Eigen::VectorXd::Constant(dim, mu0);
    p.kappa = Eigen::VectorXd::Constant(dim, kappa0);
    p.alpha = Eigen::VectorXd::Constant(dim, alpha0);
    p.beta = Eigen::VectorXd::Constant(dim, beta0);
    return p;
}

void validate(const CpdConfig& config) {
    if (!(config.hazard_lambda > 1.0) || !std::isfinite(config.hazard_lambda)) {
        throw ArgumentError("hazard_lambda must be a finite value greater than 1");
    }
    if (!(config.prior_kappa > 0.0) || !(config.prior_alpha > 0.0) || !(config.prior_beta > 0.0)) {
        throw ArgumentError("prior kappa, alpha and beta must be positive");
    }
    if (!std::isfinite(config.prior_mu)) {
        throw ArgumentError("prior mu must be finite");
    }
    if (config.max_run < 0) {
        throw ArgumentError("max_run must be non-negative");
    }
}

RunLengthState initial_state(Eigen::Index dim, const CpdConfig& config) {
    validate(config);
    if (dim <= 0) {
        throw ArgumentError("dimension must be positive");
    }
    RunLengthState state;
    state.t = 0;
    state.weights = Eigen::VectorXd::Ones(1);
    state.stats = {config.prior(dim)};
    return state;
}

double predictive_logpdf(const Eigen::VectorXd& x, const NigParams& params) {
    check_dim(x, params);
    // Student-t with nu = 2*alpha, location mu, scale^2 = beta*(kappa+1)/(alpha*kappa),
    // summed over independent dimensions.
    const auto& mu = params.mu.array();
    const auto& kappa = params.kappa.array();
    const auto& alpha = params.alpha.array();
    const auto& beta = params.beta.array();

    const Eigen::ArrayXd nu = 2.0 * alpha;
    const Eigen::ArrayXd scale2 = beta * (kappa + 1.0) / (alpha * kappa);
    const Eigen::ArrayXd z2 = (x.array() - mu).square() / scale2;

    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double n = nu[i];
        total += std::lgamma(0.5 * (n + 1.0)) - std::lgamma(0.5 * n) - 0.5 * std::log(n) -
                 kHalfLogPi - 0.5 * std::log(scale2[i]) -
                 0.5 * (n + 1.0) * std::log1p(z2[i] / n);
    }
    return total;
}

NigParams posterior_update(const NigParams& params, const Eigen::VectorXd& x) {
    check_dim(x, params);
    const auto& mu = params.mu.array();
    const auto& kappa = params.kappa.array();

    NigParams out;
    out.kappa = (kappa + 1.0).matrix();
    out.mu = ((kappa * mu + x.array()) / (kappa + 1.0)).matrix();
    out.alpha = (params.alpha.array() + 0.5).matrix();
    out.beta = (params.beta.array() +
                kappa * (x.array() - mu).square() / (2.0 * (kappa + 1.0)))
                   .matrix();
    return out;
}

RunLengthState bocpd_step(const RunLengthState& state, const Eigen::VectorXd& x,
                          const CpdConfig& config) {
    validate(config);
    if (state.stats.empty() || state.weights.size() != static_cast<Eigen::Index>(state.stats.size())) {
        throw ArgumentError("run-length state is inconsistent");
    }
    const Eigen::Index dim = state.stats.front().dim();
    check_dim(x, state.stats.front());

    const double hazard = config.hazard();
    const double log_h = std::log(hazard);
    const double log_1mh = std::log1p(-hazard);
    const Eigen::Index n = state.weights.size();
    const NigParams prior = config.prior(dim);

    // Log joint mass for each successor hypothesis: index 0 is a change, the
    // new segment starts fresh from the prior; index r+1 continues run r.
    Eigen::VectorXd log_next(n + 1);
    log_next[0] = log_h + predictive_logpdf(x, prior);

    std::vector<NigParams> next_stats;
    next_stats.reserve(static_cast<size_t>(n) + 1);
    next_stats.push_back(prior);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double log_w =
            state.weights[r] > 0.0 ? std::log(state.weights[r]) : -std::numeric_limits<double>::infinity();
        log_next[r + 1] = log_w + log_1mh + predictive_logpdf(x, state.stats[static_cast<size_t>(r)]);
        next_stats.push_back(posterior_update(state.stats[static_cast<size_t>(r)], x));
    }

    const double log_z = log_sum_exp(log_next);
    if (!std::isfinite(log_z)) {
        throw InternalError("run-length posterior lost all mass");
    }
    Eigen::VectorXd weights = (log_next.array() - log_z).exp();

    // Keep the posterior a proper distribution even after exp rounding.
    weights /= weights.sum();

    RunLengthState next;
    next.t = state.t + 1;

    if (config.max_run > 0 && weights.size() > config.max_run + 1) {
        // Merge the tail into the longest retained hypothesis. Its statistics
        // are kept from the older (longer) run, which dominates the merged
        // mass under any hazard below 1/2.
        const Eigen::Index keep = config.max_run + 1;
        Eigen::VectorXd merged = weights.head(keep);
        merged[keep - 1] += weights.tail(weights.size() - keep).sum();
        next_stats.resize(static_cast<size_t>(keep) - 1);
        next_stats.push_back(posterior_update(state.stats.back(), x));
        next.weights = merged;
        next.stats = std::move(next_stats);
    } else {
        next.weights = std::move(weights);
        next.stats = std::move(next_stats);
    }
    return next;
}

Eigen::VectorXd changepoint_probabilities(const std::vector<Eigen::VectorXd>& series,
                                          const CpdConfig& config) {
    validate(config);
    if (series.empty()) {
        throw ArgumentError("series is empty");
    }
    const Eigen::Index dim = series.front().size();
    RunLengthState state = initial_state(dim, config);
    Eigen::VectorXd probs(static_cast<Eigen::Index>(series.size()));
    for (size_t t = 0; t < series.size(); ++t) {
        state = bocpd_step(state, series[t], config);
        probs[static_cast<Eigen::Index>(t)] = state.weights[0];
    }
    return probs;
}

WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "affine") return WeightMode::affine;
    if (s == "direct") return WeightMode::direct;
    if (s == "softmax") return WeightMode::softmax;
    throw ArgumentError("unknown attention mode: " + s);
}

const char* to_string(WeightMode mode) {
    switch (mode) {
        case WeightMode::affine: return "affine";
        case WeightMode::direct: return "direct";
        case WeightMode::softmax: return "softmax";
    }
    return "affine";
}

Eigen::VectorXd attention_weights(const Eigen::VectorXd& probs, WeightMode mode, double gamma,
                                  double temperature) {
    if ((probs.array() < 0.0).any() || (probs.array() > 1.0).any() || !probs.allFinite()) {
        throw ArgumentError("change probabilities must lie in [0, 1]");
    }
    switch (mode) {
        case WeightMode::affine:
            if (!std::isfinite(gamma) || gamma < 0.0) {
                throw ArgumentError("gamma must be finite and non-negative");
            }
            return (1.0 + gamma * probs.array()).matrix();
        case WeightMode::direct:
            return probs;
        case WeightMode::softmax: {
            if (!(temperature > 0.0) || !std::isfinite(temperature)) {
                throw ArgumentError("temperature must be positive");
            }
            const Eigen::ArrayXd scaled = probs.array() / temperature;
            const double m = scaled.maxCoeff();
            const Eigen::ArrayXd e = (scaled - m).exp();
            return (static_cast<double>(probs.size()) * e / e.sum()).matrix();
        }
    }
    throw ArgumentError("unknown attention mode");
}

}  // namespace mcpd
