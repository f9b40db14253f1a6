#include "mcpd/evalkit.hpp"

#include "mcpd/errors.hpp"
#include "mcpd/mcpd_pipeline.hpp"
#include "mcpd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace mcpd {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

int binomial(Rng& rng, int trials, double p) {
    int count = 0;
    for (int i = 0; i < trials; ++i) {
        count += rng.bernoulli(p) ? 1 : 0;
    }
    return count;
}

const char* pick(Rng& rng, const std::vector<const char*>& options) {
    return options[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
}

// Benign vocabulary shared by both groups.
const std::vector<const char*> kAbsenceReasons = {
    "sick leave", "family matter", "medical appointment", "caught a cold", "school trip"};
const std::vector<const char*> kRewardReasons = {
    "academic excellence", "helping classmates", "competition prize", "perfect attendance",
    "class contribution"};
const std::vector<const char*> kPunishmentReasons = {
    "late homework", "talking in class", "dress code violation", "tardiness", "phone in class"};
const std::vector<const char*> kActivityReasons = {
    "art", "sports", "pet grooming", "music club", "science fair", "volunteering", "chess club"};

// Risk vocabulary: rare background usage for everyone, concentrated after a
// planted change when vocab_shift is on.
const std::vector<const char*> kRiskAbsenceReasons = {
    "truancy", "skipped class repeatedly", "left campus without leave", "refused to attend",
    "overslept repeatedly"};
const std::vector<const char*> kRiskPunishmentReasons = {
    "smoking", "fighting", "attacking a classmate", "touching body", "bullying", "vandalism",
    "smoking repeatedly uncorrected", "drinking", "gambling", "cheating on exam",
    "threatening classmates", "stealing", "disrupting class repeatedly", "insulting a teacher"};

Cohort subset(const Cohort& cohort, const std::vector<int>& ids) {
    Cohort out;
    out.source = cohort.source;
    out.records.reserve(ids.size());
    for (int id : ids) {
        out.records.push_back(cohort.records[static_cast<std::size_t>(id)]);
    }
    return out;
}

std::vector<int> subset(const std::vector<int>& labels, const std::vector<int>& ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int id : ids) {
        out.push_back(labels[static_cast<std::size_t>(id)]);
    }
    return out;
}

}  // namespace

MetricsReport metrics_from_counts(long tp, long fp, long tn, long fn, double threshold) {
    if (tp < 0 || fp < 0 || tn < 0 || fn < 0) {
        throw ArgumentError("confusion counts must be non-negative");
    }
    MetricsReport m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    m.threshold = threshold;
    const double total = static_cast<double>(tp + fp + tn + fn);
    m.accuracy = safe_ratio(static_cast<double>(tp + tn), total);
    m.precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    m.recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
    m.f1 = safe_ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

MetricsReport compute_metrics(const Eigen::VectorXd& probs, const std::vector<int>& labels,
                              double threshold) {
    if (probs.size() == 0 || static_cast<std::size_t>(probs.size()) != labels.size()) {
        throw ArgumentError("probabilities and labels must be non-empty and equally long");
    }
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const bool predicted = probs[i] > threshold;
        const bool actual = labels[static_cast<std::size_t>(i)] != 0;
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && !actual) ++tn;
        else ++fn;
    }
    return metrics_from_counts(tp, fp, tn, fn, threshold);
}

Split stratified_split(const std::vector<int>& labels, double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw ArgumentError("test_fraction must lie in (0, 1)");
    }
    std::vector<int> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ArgumentError("labels must be 0 or 1");
        }
        by_class[labels[i]].push_back(static_cast<int>(i));
    }
    Rng rng(seed);
    Split split;
    for (std::vector<int>& ids : by_class) {
        if (ids.size() < 2) {
            throw ArgumentError("stratified split requires at least 2 members per class");
        }
        rng.shuffle(ids);
        const long n = static_cast<long>(ids.size());
        long n_test = std::lround(test_fraction * static_cast<double>(n));
        n_test = std::clamp(n_test, 1L, n - 1);
        split.test_ids.insert(split.test_ids.end(), ids.begin(), ids.begin() + n_test);
        split.train_ids.insert(split.train_ids.end(), ids.begin() + n_test, ids.end());
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

void validate(const SyntheticConfig& config) {
    if (config.n_students < 40) {
        throw ArgumentError("synthetic cohorts need at least 40 students");
    }
    if (!(config.positive_rate > 0.0) || !(config.positive_rate < 1.0)) {
        throw ArgumentError("positive_rate must lie in (0, 1)");
    }
    if (config.change_lo < 1 || config.change_hi > kPeriodsPerYear ||
        config.change_lo > config.change_hi) {
        throw ArgumentError("change period range must satisfy 1 <= lo <= hi <= 6");
    }
    if (!(config.shift_magnitude >= 0.0) || !std::isfinite(config.shift_magnitude)) {
        throw ArgumentError("shift_magnitude must be finite and non-negative");
    }
}

SyntheticCohort generate_synthetic(const SyntheticConfig& config) {
    validate(config);
    const int n = config.n_students;
    const int n_pos = static_cast<int>(std::lround(config.positive_rate * n));
    const double shift = config.shift_magnitude;

    // AR(1) grade dynamics shared by both groups.
    constexpr double kBaselineMean = 70.0;
    constexpr double kBaselineSd = 4.0;
    constexpr double kRho = 0.6;
    constexpr double kInnovSd = 2.0;
    constexpr double kShiftScale = 6.5;  // score points per unit of shift_magnitude
    const double stationary_sd = kInnovSd / std::sqrt(1.0 - kRho * kRho);

    // Slow per-student trend and occasional setbacks of one to three periods,
    // applied to both groups, so a stretch of low scores or a gradual decline
    // is not by itself evidence of risk; only the abrupt sustained shift is.
    // Setbacks are deep enough to alarm the detector too: an alarm with calm
    // surrounding notes reads opposite to an alarm wrapped in risk phrasing.
    constexpr double kTrendSd = 1.1;
    constexpr double kDipP = 0.45;
    constexpr double kDipLo = 8.0;
    constexpr double kDipHi = 13.0;

    // A slice of the risk-free group suffers the same sustained drop with a
    // benign explanation (long illness, family relocation). With the rate
    // chosen near positive_rate, seeing a drop leaves the class roughly even
    // money, so the grade channel alone says where something happened but not
    // who is at risk; the deciding evidence is what the surrounding event
    // reasons say at that moment.
    constexpr double kBenignDropP = 0.12;

    // Per-period event probabilities. A drop of either kind comes with a burst
    // of events in its first two periods (the incident and its fallout); the
    // burst is identical for both kinds, so event counts track the drop, not
    // the label. The post multipliers reduce to 1 at shift 0, and the drop
    // machinery is disabled entirely there, keeping the null generator exactly
    // the benign process.
    constexpr double kAbsenceP = 0.10;
    constexpr double kRewardP = 0.12;
    constexpr double kPunishP = 0.05;
    constexpr double kActivityP = 0.15;
    constexpr double kAbsenceBurstP = 0.35;
    constexpr double kPunishBurstP = 0.30;
    // Risk phrasing appears at a small background rate for everyone. After a
    // planted change it floods the two burst periods and then tapers off.
    // Benign droppers carry a comparable amount of hard-edged phrasing, but
    // scattered over their stable periods away from the drop, so the total
    // amount of risk vocabulary overlaps between the groups; what separates
    // them is whether the phrasing lands on the break itself.
    constexpr double kRiskBackgroundP = 0.08;
    constexpr double kRiskAtChangeP = 0.85;
    constexpr double kRiskLateP = 0.12;
    constexpr double kRiskScatterP = 0.85;
    constexpr double kAbsenceScatterP = 0.15;
    constexpr double kPunishScatterP = 0.25;
    // Any grade sag attracts a few extra notes with hard-edged phrasing, for
    // both groups alike. A reader keying on "grades down plus risk words" is
    // fooled by every setback; telling a transient sag from a sustained break
    // takes evidence across the following periods.
    constexpr double kRiskAtSagP = 0.55;
    constexpr double kAbsenceSagP = 0.22;
    constexpr double kPunishSagP = 0.18;
    const double abs_post = std::min(0.9, kAbsenceP * (1.0 + 0.08 * shift));
    const double pun_post = std::min(0.9, kPunishP * (1.0 + 0.12 * shift));
    const double rew_post = kRewardP * std::max(0.0, 1.0 - 0.05 * shift);
    const double act_post = kActivityP * std::max(0.0, 1.0 - 0.03 * shift);
    const double major_post = std::min(0.9, 0.25 * (1.0 + 0.12 * shift));

    Rng rng(config.seed);
    std::vector<int> flags(static_cast<std::size_t>(n), 0);
    std::fill(flags.begin(), flags.begin() + n_pos, 1);
    rng.shuffle(flags);

    SyntheticCohort out;
    out.cohort.source = "synthetic";
    out.cohort.records.reserve(static_cast<std::size_t>(n));
    out.change_periods.reserve(static_cast<std::size_t>(n));
    out.labels = flags;

    for (int i = 0; i < n; ++i) {
        const bool positive = flags[static_cast<std::size_t>(i)] != 0;
        const int tau =
            positive ? static_cast<int>(rng.uniform_int(config.change_lo, config.change_hi)) : 0;
        out.change_periods.push_back(tau);
        const bool benign_drop = !positive && shift > 0.0 && rng.bernoulli(kBenignDropP);
        const int drop_start =
            positive ? (shift > 0.0 ? tau : 0)
                     : (benign_drop
                            ? static_cast<int>(rng.uniform_int(config.change_lo, config.change_hi))
                            : 0);

        StudentRecord rec;
        char id[16];
        std::snprintf(id, sizeof(id), "S%04d", i + 1);
        rec.student_id = id;
        rec.cohort_year = 2023;
        rec.grade_level = 8;
        rec.dropout_next_year = positive;

        double baseline[3];
        double ar[3];
        for (int s = 0; s < 3; ++s) {
            baseline[s] = rng.normal(kBaselineMean, kBaselineSd);
            ar[s] = rng.normal(0.0, stationary_sd);
        }
        const double slope = rng.normal(0.0, kTrendSd);
        const int dip_start = rng.bernoulli(kDipP) ? static_cast<int>(rng.uniform_int(1, 6)) : 0;
        const std::int64_t dip_roll = rng.uniform_int(0, 19);
        const int dip_len = dip_roll < 8 ? 1 : (dip_roll < 15 ? 2 : 3);
        const double dip_depth = rng.uniform(kDipLo, kDipHi);

        for (int t = 1; t <= kPeriodsPerYear; ++t) {
            PeriodRecord& period = rec.periods[static_cast<std::size_t>(t - 1)];
            period.index = t;
            const bool changed = positive && t >= tau;
            const bool dropped = drop_start > 0 && t >= drop_start;
            const bool burst = dropped && t - drop_start <= 1;

            double scores[3];
            const bool dipped = dip_start > 0 && t >= dip_start && t < dip_start + dip_len;
            for (int s = 0; s < 3; ++s) {
                ar[s] = kRho * ar[s] + rng.normal(0.0, kInnovSd);
                const double drop = dropped ? shift * kShiftScale : 0.0;
                const double dip = dipped ? dip_depth : 0.0;
                scores[s] = std::clamp(baseline[s] + slope * (t - 3.5) + ar[s] - drop - dip, 0.0, 100.0);
            }
            auto maybe_missing = [&](double v) {
                return rng.bernoulli(0.01) ? std::optional<double>() : std::optional<double>(v);
            };
            period.scores.chinese = maybe_missing(scores[0]);
            period.scores.math = maybe_missing(scores[1]);
            period.scores.english = maybe_missing(scores[2]);

            const bool at_change = changed && t - tau <= 1;
            // The detector's alarm lingers a period past the burst; the benign
            // dropper's hard phrasing stays clear of that whole neighborhood,
            // otherwise it would read exactly like the planted pattern.
            const bool alarm_tail = dropped && t - drop_start <= 2;
            const bool scatter = benign_drop && !alarm_tail;
            const double risk_reason_p = !config.vocab_shift ? kRiskBackgroundP
                                         : at_change         ? kRiskAtChangeP
                                         : changed           ? kRiskLateP
                                         : scatter           ? kRiskScatterP
                                         : dipped            ? kRiskAtSagP
                                                             : kRiskBackgroundP;
            const int absences = binomial(
                rng, 3,
                burst ? kAbsenceBurstP
                      : scatter ? kAbsenceScatterP
                      : dipped  ? kAbsenceSagP
                      : dropped ? abs_post
                                : kAbsenceP);
            for (int k = 0; k < absences; ++k) {
                BehaviorEvent e;
                e.kind = EventKind::absence;
                e.period_index = t;
                e.reason = rng.bernoulli(risk_reason_p) ? pick(rng, kRiskAbsenceReasons)
                                                        : pick(rng, kAbsenceReasons);
                period.events.push_back(std::move(e));
            }
            const int rewards = binomial(rng, 2, dropped ? rew_post : kRewardP);
            for (int k = 0; k < rewards; ++k) {
                BehaviorEvent e;
                e.kind = EventKind::reward;
                e.period_index = t;
                e.reason = pick(rng, kRewardReasons);
                period.events.push_back(std::move(e));
            }
            const int punishments = binomial(
                rng, 2,
                burst ? kPunishBurstP
                      : scatter ? kPunishScatterP
                      : dipped  ? kPunishSagP
                      : changed ? pun_post
                                : kPunishP);
            for (int k = 0; k < punishments; ++k) {
                BehaviorEvent e;
                e.kind = EventKind::punishment;
                e.severity = rng.bernoulli(changed ? major_post : 0.25) ? Severity::major : Severity::minor;
                e.period_index = t;
                e.reason = rng.bernoulli(risk_reason_p) ? pick(rng, kRiskPunishmentReasons)
                                                        : pick(rng, kPunishmentReasons);
                period.events.push_back(std::move(e));
            }
            const int activities = binomial(rng, 2, dropped ? act_post : kActivityP);
            for (int k = 0; k < activities; ++k) {
                BehaviorEvent e;
                e.kind = EventKind::activity;
                e.period_index = t;
                e.reason = pick(rng, kActivityReasons);
                period.events.push_back(std::move(e));
            }
        }
        validate_record(rec);
        out.cohort.records.push_back(std::move(rec));
    }
    return out;
}

MetricsReport logistic_baseline(const Cohort& cohort, const std::vector<int>& labels,
                                const Split& split, const McpdConfig& config, uint64_t seed,
                                double threshold) {
    (void)seed;  // the problem is convex; weights start at zero
    if (labels.size() != cohort.size() || cohort.size() == 0) {
        throw ArgumentError("label vector length does not match the cohort");
    }
    const Standardizer std_fit = fit_standardizer(cohort, split.train_ids);
    const EmbedderConfig embedder = config.embedder();
    const Eigen::Index dim = static_cast<Eigen::Index>(kPeriodsPerYear) * (3 + config.d_text);

    Eigen::MatrixXd features(dim, static_cast<Eigen::Index>(cohort.size()));
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const std::vector<Eigen::VectorXd> raw = featurize(cohort.records[i], std_fit, embedder);
        for (int t = 0; t < kPeriodsPerYear; ++t) {
            features.col(static_cast<Eigen::Index>(i))
                .segment(static_cast<Eigen::Index>(t) * (3 + config.d_text), 3 + config.d_text) =
                raw[static_cast<std::size_t>(t)];
        }
    }

    const Eigen::Index n_train = static_cast<Eigen::Index>(split.train_ids.size());
    Eigen::MatrixXd x_train(dim, n_train);
    Eigen::VectorXd y_train(n_train);
    long positives = 0;
    for (Eigen::Index j = 0; j < n_train; ++j) {
        const int id = split.train_ids[static_cast<std::size_t>(j)];
        x_train.col(j) = features.col(id);
        y_train[j] = labels[static_cast<std::size_t>(id)];
        positives += labels[static_cast<std::size_t>(id)];
    }
    if (positives == 0 || positives == n_train) {
        throw TrainingError("logistic baseline requires both classes in the training split");
    }
    const double pos_weight =
        static_cast<double>(n_train - positives) / static_cast<double>(positives);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    double b = 0.0;
    Eigen::VectorXd mw = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd vw = Eigen::VectorXd::Zero(dim);
    double mb = 0.0, vb = 0.0;
    constexpr int kIters = 300;
    constexpr double kLr = 0.05;
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

    for (int it = 1; it <= kIters; ++it) {
        Eigen::VectorXd z = (w.transpose() * x_train).transpose();
        z.array() += b;
        Eigen::VectorXd dz(n_train);
        for (Eigen::Index j = 0; j < n_train; ++j) {
            const double p = sigmoid(z[j]);
            dz[j] = pos_weight * y_train[j] * (p - 1.0) + (1.0 - y_train[j]) * p;
        }
        const Eigen::VectorXd gw = x_train * dz / static_cast<double>(n_train);
        const double gb = dz.sum() / static_cast<double>(n_train);

        const double bc1 = 1.0 - std::pow(kBeta1, it);
        const double bc2 = 1.0 - std::pow(kBeta2, it);
        mw = kBeta1 * mw + (1.0 - kBeta1) * gw;
        vw = (kBeta2 * vw.array() + (1.0 - kBeta2) * gw.array().square()).matrix();
        w.array() -= kLr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + kEps);
        mb = kBeta1 * mb + (1.0 - kBeta1) * gb;
        vb = kBeta2 * vb + (1.0 - kBeta2) * gb * gb;
        b -= kLr * (mb / bc1) / (std::sqrt(vb / bc2) + kEps);
    }

    Eigen::VectorXd probs(static_cast<Eigen::Index>(split.test_ids.size()));
    std::vector<int> test_labels;
    test_labels.reserve(split.test_ids.size());
    for (std::size_t j = 0; j < split.test_ids.size(); ++j) {
        const int id = split.test_ids[j];
        probs[static_cast<Eigen::Index>(j)] = sigmoid(w.dot(features.col(id)) + b);
        test_labels.push_back(labels[static_cast<std::size_t>(id)]);
    }
    return compute_metrics(probs, test_labels, threshold);
}

std::vector<ComparisonRow> run_comparison(const Cohort& cohort, const std::vector<int>& labels,
                                          const McpdConfig& config, double test_fraction,
                                          uint64_t seed, double threshold) {
    validate(config);
    const Split split = stratified_split(labels, test_fraction, seed);
    const Cohort train = subset(cohort, split.train_ids);
    const Cohort test = subset(cohort, split.test_ids);
    const std::vector<int> train_labels = subset(labels, split.train_ids);
    const std::vector<int> test_labels = subset(labels, split.test_ids);

    auto evaluate = [&](const McpdConfig& cfg) {
        const FitResult result = fit(train, train_labels, cfg);
        Eigen::VectorXd probs(static_cast<Eigen::Index>(test.size()));
        for (std::size_t i = 0; i < test.size(); ++i) {
            probs[static_cast<Eigen::Index>(i)] = predict(result.model, test.records[i]).probability;
        }
        return compute_metrics(probs, test_labels, threshold);
    };

    McpdConfig mcpd_cfg = config;
    mcpd_cfg.seed = seed;
    McpdConfig ablation_cfg = mcpd_cfg;
    ablation_cfg.weight_mode = WeightMode::affine;
    ablation_cfg.gamma = 0.0;

    std::vector<ComparisonRow> rows;
    rows.push_back({"mcpd", evaluate(mcpd_cfg)});
    rows.push_back({"ablation", evaluate(ablation_cfg)});
    rows.push_back({"logistic", logistic_baseline(cohort, labels, split, config, seed, threshold)});
    return rows;
}

std::string format_comparison_csv(
    const std::vector<std::pair<uint64_t, std::vector<ComparisonRow>>>& runs) {
    std::ostringstream out;
    out << "model,accuracy,precision,recall,f1,seed\n";
    for (const auto& [seed, rows] : runs) {
        for (const ComparisonRow& row : rows) {
            out << row.model << "," << fmt_double(row.metrics.accuracy) << ","
                << fmt_double(row.metrics.precision) << "," << fmt_double(row.metrics.recall)
                << "," << fmt_double(row.metrics.f1) << "," << seed << "\n";
        }
    }
    return out.str();
}

}  // namespace mcpd
