#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcpd {

inline constexpr int kPeriodsPerYear = 6;
inline constexpr int kRecordSchemaVersion = 1;

// Chinese / Mathematics / English marks on a single exam, each in [0, 100].
// A missing mark is an explicit absent value, never a sentinel number.
struct SubjectScores {
    std::optional<double> chinese;
    std::optional<double> math;
    std::optional<double> english;

    // Sum of the three marks, absent if any subject is missing.
    std::optional<double> composite() const {
        if (!chinese || !math || !english) {
            return std::nullopt;
        }
        return *chinese + *math + *english;
    }
};

enum class EventKind { absence, reward, punishment, activity };
enum class Severity { major, minor, none };

const char* to_string(EventKind kind);
const char* to_string(Severity severity);
EventKind event_kind_from_string(const std::string& s);
Severity severity_from_string(const std::string& s);

struct BehaviorEvent {
    EventKind kind = EventKind::absence;
    Severity severity = Severity::none;  // major/minor only for punishments
    std::string reason;
    int period_index = 1;
};

struct PeriodRecord {
    int index = 1;  // 1..6, aligned with the year's six exams
    SubjectScores scores;
    std::vector<BehaviorEvent> events;
};

// One student-year plus the following year's dropout label.
struct StudentRecord {
    std::string student_id;
    int cohort_year = 0;
    int grade_level = 0;
    std::array<PeriodRecord, kPeriodsPerYear> periods;
    bool dropout_next_year = false;
};

struct Cohort {
    std::vector<StudentRecord> records;
    std::string source;

    std::size_t size() const { return records.size(); }
};

// Throws SchemaError if the record violates an invariant (period indices,
// score ranges, severity rules, event/period index agreement).
void validate_record(const StudentRecord& record);

// Record file I/O: one JSON object per line, schema documented in README.
Cohort load_records(const std::string& path);
void save_records(const Cohort& cohort, const std::string& path);
std::string serialize_record(const StudentRecord& record);
StudentRecord parse_record_line(const std::string& line, long line_number);

// Renders the canonical one-sentence description of a period: absence,
// reward, punishment, activity counts in that order, reasons joined by "; ".
std::string render_period_summary(const PeriodRecord& period);

inline constexpr int kEventKindCount = 4;

// Per-group event-count statistics for one behavior kind.
struct EventStats {
    bool present = false;   // false when the cohort has no students in the group
    std::int64_t total = 0; // exact event count over the group
    double mean = 0.0;
    double stddev = 0.0;    // population standard deviation
};

// Descriptive comparison of the at-risk group (dropout_next_year = true)
// against the rest: event-count statistics per kind, plus the punishment and
// activity reason tokens exclusive to each group.
struct DifferenceReport {
    std::size_t group_size[2] = {0, 0};                    // [at_risk, not_at_risk]
    EventStats stats[2][kEventKindCount];                  // [group][kind]
    std::vector<std::string> exclusive_punishment[2];      // sorted, disjoint
    std::vector<std::string> exclusive_activity[2];
};

DifferenceReport cohort_report(const Cohort& cohort);

// CSV block (group, event_kind, mean, stddev) followed by the exclusive-token
// section; the format the `report` subcommand writes.
std::string format_difference_report(const DifferenceReport& report);

}  // namespace mcpd
