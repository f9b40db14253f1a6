#pragma once

#include "mcpd/data_model.hpp"

#include <array>
#include <string>
#include <vector>

namespace mcpd {

// Dropout plus the three rule-based crisis labels used for the label
// retargeting experiments.
struct LabelSet {
    std::string student_id;
    bool dropout = false;
    bool academic_crisis = false;
    bool behavioral_crisis = false;
    bool time_crisis = false;
};

enum class LabelTarget { dropout, academic, behavioral, time };

LabelTarget label_target_from_string(const std::string& s);
const char* to_string(LabelTarget target);

// flags[i][e] is true when student i's composite score on exam e ranks in the
// lowest ceil(fraction * participants) of that exam; all students tied at the
// cutoff are flagged. A student with a missing subject does not participate
// in that exam and is never flagged for it.
using PercentileFlags = std::vector<std::array<bool, kPeriodsPerYear>>;
PercentileFlags bottom_percentile_flags(const Cohort& cohort, double fraction);

// Bottom-15% composite more than 3 of the 6 exams (i.e. >= 4 flags).
std::vector<bool> label_academic_crisis(const Cohort& cohort, double fraction = 0.15);

// At least one major and at least one minor punishment within the year.
bool label_behavioral_crisis(const StudentRecord& record);

// More than 2 activity events over the year (>= 3) and a year-average
// composite score in the bottom `fraction` of the cohort ranking.
std::vector<bool> label_time_crisis(const Cohort& cohort, double fraction = 0.15);

std::vector<LabelSet> compute_labels(const Cohort& cohort, double fraction = 0.15);

// Pulls one label column out of the label sets, aligned with cohort order.
std::vector<bool> select_labels(const std::vector<LabelSet>& labels, LabelTarget target);

// CSV: student_id, dropout, academic_crisis, behavioral_crisis, time_crisis.
std::string format_label_csv(const std::vector<LabelSet>& labels);

}  // namespace mcpd
