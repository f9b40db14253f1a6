#pragma once

#include "mcpd/data_model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace mcpd {

struct McpdConfig;

// Confusion counts and derived scores at a fixed threshold. Degenerate
// denominators yield 0 by convention.
struct MetricsReport {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double threshold = 0.5;
};

MetricsReport metrics_from_counts(long tp, long fp, long tn, long fn, double threshold = 0.5);

// Predicted positive iff probability > threshold.
MetricsReport compute_metrics(const Eigen::VectorXd& probs, const std::vector<int>& labels,
                              double threshold = 0.5);

struct Split {
    std::vector<int> train_ids;
    std::vector<int> test_ids;
};

// Per-class proportional split with a seeded shuffle. Every class keeps at
// least one member on each side; classes with fewer than 2 members are an
// error.
Split stratified_split(const std::vector<int>& labels, double test_fraction, uint64_t seed);

struct SyntheticConfig {
    int n_students = 1200;
    double positive_rate = 0.10;
    double shift_magnitude = 3.0;  // strength of the planted post-change drop
    int change_lo = 2;             // planted change period range, inclusive
    int change_hi = 5;
    bool vocab_shift = true;
    uint64_t seed = 0;
};

void validate(const SyntheticConfig& config);

// A generated cohort plus the planted ground truth: change_periods[i] is the
// period at which student i's shift begins, 0 for negatives.
struct SyntheticCohort {
    Cohort cohort;
    std::vector<int> change_periods;
    std::vector<int> labels;  // mirrors dropout_next_year
};

// Negatives follow a smooth AR(1) drift around a per-student baseline with
// sparse, mostly benign events; transient setbacks and a slice of benign
// sustained drops make grade dynamics alone an unreliable tell. Positives are
// identical until a uniformly drawn change period, then grades drop by an
// amount proportional to shift_magnitude, absence and punishment rates surge
// for two periods, and (when vocab_shift is on) event reasons concentrate
// at-risk vocabulary in those periods. With shift_magnitude 0 and vocab_shift
// off the two groups are distributionally identical.
SyntheticCohort generate_synthetic(const SyntheticConfig& config);

// Logistic regression on the concatenation of the six raw period vectors,
// trained with the same class-weighted loss on the train side of the split.
MetricsReport logistic_baseline(const Cohort& cohort, const std::vector<int>& labels,
                                const Split& split, const McpdConfig& config, uint64_t seed,
                                double threshold = 0.5);

struct ComparisonRow {
    std::string model;
    MetricsReport metrics;
};

// Trains the full model, the weight-free ablation (affine mode, gamma 0) and
// the logistic baseline on one shared split and seed.
std::vector<ComparisonRow> run_comparison(const Cohort& cohort, const std::vector<int>& labels,
                                          const McpdConfig& config, double test_fraction,
                                          uint64_t seed, double threshold = 0.5);

// CSV with header model,accuracy,precision,recall,f1,seed.
std::string format_comparison_csv(const std::vector<std::pair<uint64_t, std::vector<ComparisonRow>>>& runs);

}  // namespace mcpd
