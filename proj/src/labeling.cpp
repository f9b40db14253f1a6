#include "mcpd/labeling.hpp"

#include "mcpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

namespace mcpd {

LabelTarget label_target_from_string(const std::string& s) {
    if (s == "dropout") return LabelTarget::dropout;
    if (s == "academic") return LabelTarget::academic;
    if (s == "behavioral") return LabelTarget::behavioral;
    if (s == "time") return LabelTarget::time;
    throw ArgumentError("unknown label target '" + s + "'");
}

const char* to_string(LabelTarget target) {
    switch (target) {
        case LabelTarget::dropout: return "dropout";
        case LabelTarget::academic: return "academic";
        case LabelTarget::behavioral: return "behavioral";
        case LabelTarget::time: return "time";
    }
    return "?";
}

namespace {

// Flags the lowest ceil(fraction * n) scores, extending over ties at the
// cutoff. `scores` holds (value, student index) pairs for participants only.
void flag_bottom(std::vector<std::pair<double, std::size_t>>& scores, double fraction,
                 const std::function<void(std::size_t)>& mark) {
    if (scores.empty()) {
        return;
    }
    const auto quota = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(scores.size())));
    std::sort(scores.begin(), scores.end());
    const double cutoff = scores[quota - 1].first;
    for (const auto& [value, index] : scores) {
        if (value > cutoff) {
            break;
        }
        mark(index);
    }
}

}  // namespace

PercentileFlags bottom_percentile_flags(const Cohort& cohort, double fraction) {
    if (cohort.records.empty()) {
        throw ArgumentError("bottom_percentile_flags requires a non-empty cohort");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ArgumentError("fraction must be in (0,1), got " + std::to_string(fraction));
    }
    PercentileFlags flags(cohort.records.size());
    for (auto& row : flags) {
        row.fill(false);
    }
    for (int exam = 0; exam < kPeriodsPerYear; ++exam) {
        std::vector<std::pair<double, std::size_t>> scores;
        for (std::size_t i = 0; i < cohort.records.size(); ++i) {
            const auto composite =
                cohort.records[i].periods[static_cast<std::size_t>(exam)].scores.composite();
            if (composite) {
                scores.emplace_back(*composite, i);
            }
        }
        flag_bottom(scores, fraction, [&](std::size_t i) { flags[i][static_cast<std::size_t>(exam)] = true; });
    }
    return flags;
}

std::vector<bool> label_academic_crisis(const Cohort& cohort, double fraction) {
    const PercentileFlags flags = bottom_percentile_flags(cohort, fraction);
    std::vector<bool> labels(cohort.records.size());
    for (std::size_t i = 0; i < flags.size(); ++i) {
        int count = 0;
        for (const bool f : flags[i]) {
            count += f ? 1 : 0;
        }
        labels[i] = count >= 4;  // "more than 3 times"
    }
    return labels;
}

bool label_behavioral_crisis(const StudentRecord& record) {
    bool has_major = false;
    bool has_minor = false;
    for (const PeriodRecord& period : record.periods) {
        for (const BehaviorEvent& event : period.events) {
            if (event.kind != EventKind::punishment) {
                continue;
            }
            has_major = has_major || event.severity == Severity::major;
            has_minor = has_minor || event.severity == Severity::minor;
        }
    }
    return has_major && has_minor;
}

std::vector<bool> label_time_crisis(const Cohort& cohort, double fraction) {
    if (cohort.records.empty()) {
        throw ArgumentError("label_time_crisis requires a non-empty cohort");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ArgumentError("fraction must be in (0,1), got " + std::to_string(fraction));
    }
    // Year-average composite over exams the student actually sat.
    std::vector<std::pair<double, std::size_t>> averages;
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        double sum = 0.0;
        int n = 0;
        for (const PeriodRecord& period : cohort.records[i].periods) {
            if (const auto composite = period.scores.composite()) {
                sum += *composite;
                ++n;
            }
        }
        if (n > 0) {
            averages.emplace_back(sum / n, i);
        }
    }
    std::vector<bool> bottom(cohort.records.size(), false);
    flag_bottom(averages, fraction, [&](std::size_t i) { bottom[i] = true; });

    std::vector<bool> labels(cohort.records.size());
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        int activities = 0;
        for (const PeriodRecord& period : cohort.records[i].periods) {
            for (const BehaviorEvent& event : period.events) {
                activities += event.kind == EventKind::activity ? 1 : 0;
            }
        }
        labels[i] = activities >= 3 && bottom[i];  // "more than 2 activities"
    }
    return labels;
}

std::vector<LabelSet> compute_labels(const Cohort& cohort, double fraction) {
    const std::vector<bool> academic = label_academic_crisis(cohort, fraction);
    const std::vector<bool> time = label_time_crisis(cohort, fraction);
    std::vector<LabelSet> labels(cohort.records.size());
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        labels[i].student_id = cohort.records[i].student_id;
        labels[i].dropout = cohort.records[i].dropout_next_year;
        labels[i].academic_crisis = academic[i];
        labels[i].behavioral_crisis = label_behavioral_crisis(cohort.records[i]);
        labels[i].time_crisis = time[i];
    }
    return labels;
}

std::vector<bool> select_labels(const std::vector<LabelSet>& labels, LabelTarget target) {
    std::vector<bool> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (target) {
            case LabelTarget::dropout: out[i] = labels[i].dropout; break;
            case LabelTarget::academic: out[i] = labels[i].academic_crisis; break;
            case LabelTarget::behavioral: out[i] = labels[i].behavioral_crisis; break;
            case LabelTarget::time: out[i] = labels[i].time_crisis; break;
        }
    }
    return out;
}

std::string format_label_csv(const std::vector<LabelSet>& labels) {
    std::ostringstream out;
    out << "student_id,dropout,academic_crisis,behavioral_crisis,time_crisis\n";
    for (const LabelSet& l : labels) {
        out << l.student_id << ',' << (l.dropout ? 1 : 0) << ',' << (l.academic_crisis ? 1 : 0)
            << ',' << (l.behavioral_crisis ? 1 : 0) << ',' << (l.time_crisis ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace mcpd
