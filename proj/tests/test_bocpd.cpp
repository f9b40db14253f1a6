#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "mcpd/bocpd.hpp"
#include "mcpd/errors.hpp"
#include "mcpd/rng.hpp"
#include "oracles.hpp"

using mcpd::ArgumentError;
using mcpd::CpdConfig;
using mcpd::NigParams;
using mcpd::Rng;
using mcpd::RunLengthState;
using mcpd::WeightMode;

namespace {

CpdConfig random_config(Rng& rng) {
    CpdConfig cfg;
    cfg.hazard_lambda = rng.uniform(2.0, 40.0);
    cfg.prior_mu = rng.uniform(-2.0, 2.0);
    cfg.prior_kappa = rng.uniform(0.2, 3.0);
    cfg.prior_alpha = rng.uniform(0.5, 4.0);
    cfg.prior_beta = rng.uniform(0.2, 3.0);
    return cfg;
}

std::vector<Eigen::VectorXd> random_series(Rng& rng, int length, Eigen::Index dim) {
    std::vector<Eigen::VectorXd> xs;
    for (int t = 0; t < length; ++t) {
        Eigen::VectorXd x(dim);
        for (Eigen::Index d = 0; d < dim; ++d) x[d] = rng.normal(rng.uniform(-3.0, 3.0), rng.uniform(0.3, 2.5));
        xs.push_back(x);
    }
    return xs;
}

double max_rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-290});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("student-t predictive matches hand values") {
    const NigParams prior = mcpd::make_prior(1, 0.0, 1.0, 1.0, 1.0);

    // nu = 2, loc = 0, scale^2 = 2: density at 0 is 1 / (2 sqrt(2) * sqrt(2)) = 1/4.
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    CHECK(mcpd::predictive_logpdf(x0, prior) == doctest::Approx(std::log(0.25)).epsilon(1e-12));

    // General point, against the t density written out longhand.
    const double nu = 2.0 * prior.alpha[0];
    const double scale2 = prior.beta[0] * (prior.kappa[0] + 1.0) / (prior.alpha[0] * prior.kappa[0]);
    const double xv = 1.3;
    const double z2 = (xv - prior.mu[0]) * (xv - prior.mu[0]) / scale2;
    const double expected = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * std::acos(-1.0) * scale2) -
                            0.5 * (nu + 1.0) * std::log(1.0 + z2 / nu);
    Eigen::VectorXd x1(1);
    x1 << xv;
    CHECK(mcpd::predictive_logpdf(x1, prior) == doctest::Approx(expected).epsilon(1e-12));

    // Multi-dim predictive is the product over independent dimensions.
    const NigParams prior3 = mcpd::make_prior(3, 0.4, 1.5, 2.0, 0.8);
    Eigen::VectorXd v(3);
    v << -1.0, 0.2, 2.5;
    double sum = 0.0;
    for (int d = 0; d < 3; ++d) {
        Eigen::VectorXd one(1);
        one << v[d];
        sum += mcpd::predictive_logpdf(one, mcpd::make_prior(1, 0.4, 1.5, 2.0, 0.8));
    }
    CHECK(mcpd::predictive_logpdf(v, prior3) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("predictive agrees with the one-point segment marginal") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        CpdConfig cfg = random_config(rng);
        const Eigen::Index dim = 1 + rng.uniform_int(0, 2);
        Eigen::VectorXd x(dim);
        for (Eigen::Index d = 0; d < dim; ++d) x[d] = rng.normal(0.0, 3.0);
        const double lib = mcpd::predictive_logpdf(x, cfg.prior(dim));
        const double oracle = test_oracles::nig_block_log_marginal({x}, cfg);
        CHECK(lib == doctest::Approx(oracle).epsilon(1e-11));
    }
}

TEST_CASE("posterior update on hand-worked cases") {
    const NigParams prior = mcpd::make_prior(1, 0.0, 1.0, 1.0, 1.0);

    Eigen::VectorXd zero(1);
    zero << 0.0;
    NigParams a = mcpd::posterior_update(prior, zero);
    CHECK(a.mu[0] == doctest::Approx(0.0));
    CHECK(a.kappa[0] == doctest::Approx(2.0));
    CHECK(a.alpha[0] == doctest::Approx(1.5));
    CHECK(a.beta[0] == doctest::Approx(1.0));

    Eigen::VectorXd two(1);
    two << 2.0;
    NigParams b = mcpd::posterior_update(prior, two);
    CHECK(b.mu[0] == doctest::Approx(1.0));
    CHECK(b.kappa[0] == doctest::Approx(2.0));
    CHECK(b.alpha[0] == doctest::Approx(1.5));
    // beta' = beta + kappa (x - mu)^2 / (2 (kappa + 1)) = 1 + 1*4/4 = 2.
    CHECK(b.beta[0] == doctest::Approx(2.0));
}

TEST_CASE("sequential updates equal the sufficient-statistics closed form") {
    Rng rng(23);
    const double mu0 = 0.3, k0 = 2.0, a0 = 1.5, b0 = 0.7;
    NigParams p = mcpd::make_prior(2, mu0, k0, a0, b0);
    std::vector<Eigen::VectorXd> xs = random_series(rng, 5, 2);
    for (const auto& x : xs) p = mcpd::posterior_update(p, x);

    const double n = 5.0;
    for (int d = 0; d < 2; ++d) {
        double mean = 0.0;
        for (const auto& x : xs) mean += x[d];
        mean /= n;
        double sse = 0.0;
        for (const auto& x : xs) sse += (x[d] - mean) * (x[d] - mean);
        const double kn = k0 + n;
        CHECK(p.kappa[d] == doctest::Approx(kn).epsilon(1e-12));
        CHECK(p.alpha[d] == doctest::Approx(a0 + 0.5 * n).epsilon(1e-12));
        CHECK(p.mu[d] == doctest::Approx((k0 * mu0 + n * mean) / kn).epsilon(1e-12));
        const double bn = b0 + 0.5 * sse + k0 * n * (mean - mu0) * (mean - mu0) / (2.0 * kn);
        CHECK(p.beta[d] == doctest::Approx(bn).epsilon(1e-12));
    }
}

TEST_CASE("initial state and first step") {
    CpdConfig cfg;
    cfg.hazard_lambda = 10.0;
    RunLengthState state = mcpd::initial_state(2, cfg);
    CHECK(state.t == 0);
    REQUIRE(state.weights.size() == 1);
    CHECK(state.weights[0] == 1.0);
    REQUIRE(state.stats.size() == 1);
    CHECK(state.stats[0].dim() == 2);

    Eigen::VectorXd x(2);
    x << 0.7, -1.2;
    RunLengthState next = mcpd::bocpd_step(state, x, cfg);
    CHECK(next.t == 1);
    REQUIRE(next.weights.size() == 2);
    // Before any evidence about segment structure exists, the changepoint
    // mass is exactly the hazard.
    CHECK(next.weights[0] == doctest::Approx(cfg.hazard()).epsilon(1e-14));
    CHECK(next.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    // Run-length 0 keeps the prior; run-length 1 absorbed the observation.
    CHECK(next.stats[0].kappa[0] == cfg.prior_kappa);
    CHECK(next.stats[1].kappa[0] == doctest::Approx(cfg.prior_kappa + 1.0));
}

TEST_CASE("run-length posterior matches the enumeration oracle") {
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        CpdConfig cfg = random_config(rng);
        const Eigen::Index dim = 1 + rng.uniform_int(0, 2);
        const int length = 1 + static_cast<int>(rng.uniform_int(0, 5));
        std::vector<Eigen::VectorXd> xs = random_series(rng, length, dim);

        RunLengthState state = mcpd::initial_state(dim, cfg);
        for (int t = 0; t < length; ++t) {
            state = mcpd::bocpd_step(state, xs[t], cfg);
            std::vector<Eigen::VectorXd> prefix(xs.begin(), xs.begin() + t + 1);
            const Eigen::VectorXd expected = test_oracles::enumerate_run_length_posterior(prefix, cfg);
            REQUIRE(state.weights.size() == t + 2);
            CHECK(max_rel_diff(state.weights, expected) < 1e-9);
            CHECK(std::abs(state.weights.sum() - 1.0) < 1e-12);
            CHECK(state.weights.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("changepoint probabilities are the per-step zero-run mass") {
    Rng rng(7);
    CpdConfig cfg = random_config(rng);
    std::vector<Eigen::VectorXd> xs = random_series(rng, 6, 3);

    const Eigen::VectorXd probs = mcpd::changepoint_probabilities(xs, cfg);
    REQUIRE(probs.size() == 6);
    RunLengthState state = mcpd::initial_state(3, cfg);
    for (int t = 0; t < 6; ++t) {
        state = mcpd::bocpd_step(state, xs[t], cfg);
        CHECK(probs[t] == state.weights[0]);  // same recursion, bit for bit
    }
    // Streaming property: a prefix of the series yields a prefix of the scores.
    std::vector<Eigen::VectorXd> head(xs.begin(), xs.begin() + 4);
    const Eigen::VectorXd head_probs = mcpd::changepoint_probabilities(head, cfg);
    for (int t = 0; t < 4; ++t) CHECK(head_probs[t] == probs[t]);
}

TEST_CASE("average changepoint probability tracks the hazard on stationary data") {
    // Data drawn from the model itself with no changepoints beyond the
    // hazard's own: mean P(r=0) over many stationary series should sit
    // near H at the first step and stay the right order of magnitude.
    Rng rng(55);
    CpdConfig cfg;
    cfg.hazard_lambda = 10.0;
    double total = 0.0;
    int count = 0;
    for (int sim = 0; sim < 800; ++sim) {
        // sigma^2 ~ InvGamma(alpha=1, beta=1): beta / Exp(1).
        const double sigma2 = cfg.prior_beta / (-std::log(rng.uniform()));
        const double mean = rng.normal(cfg.prior_mu, std::sqrt(sigma2 / cfg.prior_kappa));
        std::vector<Eigen::VectorXd> xs;
        for (int t = 0; t < 6; ++t) {
            Eigen::VectorXd x(1);
            x << rng.normal(mean, std::sqrt(sigma2));
            xs.push_back(x);
        }
        const Eigen::VectorXd probs = mcpd::changepoint_probabilities(xs, cfg);
        CHECK(probs[0] == doctest::Approx(cfg.hazard()).epsilon(1e-12));
        total += probs.mean();
        ++count;
    }
    CHECK(std::abs(total / count - cfg.hazard()) < 0.03);
}

TEST_CASE("a large planted shift is localized") {
    Rng rng(99);
    CpdConfig cfg;
    cfg.hazard_lambda = 10.0;
    int hits = 0;
    const int sims = 100;
    for (int sim = 0; sim < sims; ++sim) {
        const int tau = 1 + static_cast<int>(rng.uniform_int(1, 4));  // 0-based period 2..5
        std::vector<Eigen::VectorXd> xs;
        for (int t = 0; t < 6; ++t) {
            Eigen::VectorXd x(2);
            const double shift = t >= tau ? 8.0 : 0.0;
            x << rng.normal(shift, 1.0), rng.normal(-shift, 1.0);
            xs.push_back(x);
        }
        const Eigen::VectorXd probs = mcpd::changepoint_probabilities(xs, cfg);
        int argmax = 0;
        probs.maxCoeff(&argmax);
        if (argmax == tau) ++hits;
    }
    CHECK(hits >= 90);
}

TEST_CASE("bounded run length merges tail mass") {
    Rng rng(31);
    CpdConfig cfg = random_config(rng);
    std::vector<Eigen::VectorXd> xs = random_series(rng, 4, 1);

    CpdConfig bounded = cfg;
    bounded.max_run = 2;

    RunLengthState full = mcpd::initial_state(1, cfg);
    RunLengthState capped = mcpd::initial_state(1, bounded);
    for (int t = 0; t < 2; ++t) {
        full = mcpd::bocpd_step(full, xs[t], cfg);
        capped = mcpd::bocpd_step(capped, xs[t], bounded);
        CHECK(max_rel_diff(full.weights, capped.weights) < 1e-14);
    }
    // Third step: the unbounded posterior has runs 0..3; the capped one
    // folds run 3 into run 2.
    full = mcpd::bocpd_step(full, xs[2], cfg);
    capped = mcpd::bocpd_step(capped, xs[2], bounded);
    REQUIRE(full.weights.size() == 4);
    REQUIRE(capped.weights.size() == 3);
    CHECK(capped.weights[0] == doctest::Approx(full.weights[0]).epsilon(1e-13));
    CHECK(capped.weights[1] == doctest::Approx(full.weights[1]).epsilon(1e-13));
    CHECK(capped.weights[2] == doctest::Approx(full.weights[2] + full.weights[3]).epsilon(1e-13));
    CHECK(static_cast<Eigen::Index>(capped.stats.size()) == capped.weights.size());

    // Length stays capped and normalized as the stream continues.
    capped = mcpd::bocpd_step(capped, xs[3], bounded);
    CHECK(capped.weights.size() == 3);
    CHECK(std::abs(capped.weights.sum() - 1.0) < 1e-12);

    // max_run = 0 means unbounded.
    CHECK(cfg.max_run == 0);
}

TEST_CASE("attention weight modes") {
    Eigen::VectorXd p(3);
    p << 0.2, 0.8, 0.0;

    SUBCASE("affine") {
        const Eigen::VectorXd w = mcpd::attention_weights(p, WeightMode::affine, 1.0, 1.0);
        CHECK(w[0] == doctest::Approx(1.2));
        CHECK(w[1] == doctest::Approx(1.8));
        CHECK(w[2] == doctest::Approx(1.0));
        const Eigen::VectorXd w2 = mcpd::attention_weights(p, WeightMode::affine, 0.5, 1.0);
        CHECK(w2[1] == doctest::Approx(1.4));
    }
    SUBCASE("affine with gamma zero is exactly one") {
        const Eigen::VectorXd w = mcpd::attention_weights(p, WeightMode::affine, 0.0, 1.0);
        for (int i = 0; i < 3; ++i) CHECK(w[i] == 1.0);
    }
    SUBCASE("direct returns the probabilities unchanged") {
        const Eigen::VectorXd w = mcpd::attention_weights(p, WeightMode::direct, 1.0, 1.0);
        for (int i = 0; i < 3; ++i) CHECK(w[i] == p[i]);
    }
    SUBCASE("softmax sums to the sequence length") {
        const double tau = 0.5;
        const Eigen::VectorXd w = mcpd::attention_weights(p, WeightMode::softmax, 1.0, tau);
        const double s = std::exp(0.2 / tau) + std::exp(0.8 / tau) + std::exp(0.0);
        CHECK(w[0] == doctest::Approx(3.0 * std::exp(0.2 / tau) / s).epsilon(1e-12));
        CHECK(w[1] == doctest::Approx(3.0 * std::exp(0.8 / tau) / s).epsilon(1e-12));
        CHECK(w[2] == doctest::Approx(3.0 * std::exp(0.0) / s).epsilon(1e-12));
        CHECK(w.sum() == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("mode names round-trip") {
        for (auto mode : {WeightMode::affine, WeightMode::direct, WeightMode::softmax}) {
            CHECK(mcpd::weight_mode_from_string(mcpd::to_string(mode)) == mode);
        }
        CHECK_THROWS_AS(mcpd::weight_mode_from_string("linear"), ArgumentError);
    }
}

TEST_CASE("argument validation") {
    CpdConfig cfg;
    Eigen::VectorXd x(1);
    x << 0.0;

    SUBCASE("hazard lambda must exceed one") {
        CpdConfig bad = cfg;
        bad.hazard_lambda = 1.0;
        CHECK_THROWS_AS(mcpd::initial_state(1, bad), ArgumentError);
    }
    SUBCASE("prior parameters must be positive") {
        CpdConfig bad = cfg;
        bad.prior_beta = 0.0;
        CHECK_THROWS_AS(mcpd::initial_state(1, bad), ArgumentError);
    }
    SUBCASE("negative max_run is rejected") {
        CpdConfig bad = cfg;
        bad.max_run = -1;
        CHECK_THROWS_AS(mcpd::initial_state(1, bad), ArgumentError);
    }
    SUBCASE("dimension mismatch") {
        RunLengthState state = mcpd::initial_state(2, cfg);
        CHECK_THROWS_AS(mcpd::bocpd_step(state, x, cfg), ArgumentError);
    }
    SUBCASE("non-finite observation") {
        RunLengthState state = mcpd::initial_state(1, cfg);
        Eigen::VectorXd bad(1);
        bad << std::nan("");
        CHECK_THROWS_AS(mcpd::bocpd_step(state, bad, cfg), ArgumentError);
    }
    SUBCASE("empty series") {
        CHECK_THROWS_AS(mcpd::changepoint_probabilities({}, cfg), ArgumentError);
    }
    SUBCASE("probabilities outside the unit interval") {
        Eigen::VectorXd bad(2);
        bad << 0.5, 1.5;
        CHECK_THROWS_AS(mcpd::attention_weights(bad, WeightMode::affine, 1.0, 1.0), ArgumentError);
    }
    SUBCASE("negative gamma") {
        Eigen::VectorXd p(1);
        p << 0.5;
        CHECK_THROWS_AS(mcpd::attention_weights(p, WeightMode::affine, -0.1, 1.0), ArgumentError);
    }
    SUBCASE("non-positive temperature") {
        Eigen::VectorXd p(1);
        p << 0.5;
        CHECK_THROWS_AS(mcpd::attention_weights(p, WeightMode::softmax, 1.0, 0.0), ArgumentError);
    }
}
