#include "mcpd/data_model.hpp"

#include "mcpd/errors.hpp"
#include "mcpd/text_embed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace mcpd {

using ordered_json = nlohmann::ordered_json;

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::absence: return "absence";
        case EventKind::reward: return "reward";
        case EventKind::punishment: return "punishment";
        case EventKind::activity: return "activity";
    }
    return "?";
}

const char* to_string(Severity severity) {
    switch (severity) {
        case Severity::major: return "major";
        case Severity::minor: return "minor";
        case Severity::none: return "none";
    }
    return "?";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "absence") return EventKind::absence;
    if (s == "reward") return EventKind::reward;
    if (s == "punishment") return EventKind::punishment;
    if (s == "activity") return EventKind::activity;
    throw SchemaError("unknown event kind '" + s + "'");
}

Severity severity_from_string(const std::string& s) {
    if (s == "major") return Severity::major;
    if (s == "minor") return Severity::minor;
    if (s == "none") return Severity::none;
    throw SchemaError("unknown severity '" + s + "'");
}

namespace {

void validate_score(const std::optional<double>& score, const std::string& student_id,
                    const char* subject) {
    if (!score) {
        return;
    }
    if (!std::isfinite(*score) || *score < 0.0 || *score > 100.0) {
        throw SchemaError("student " + student_id + ": " + subject +
                          " score out of [0,100]");
    }
}

}  // namespace

void validate_record(const StudentRecord& record) {
    if (record.student_id.empty()) {
        throw SchemaError("record with empty student_id");
    }
    for (int p = 0; p < kPeriodsPerYear; ++p) {
        const PeriodRecord& period = record.periods[static_cast<std::size_t>(p)];
        if (period.index != p + 1) {
            throw SchemaError("student " + record.student_id + ": period " +
                              std::to_string(p + 1) + " has index " +
                              std::to_string(period.index));
        }
        validate_score(period.scores.chinese, record.student_id, "chinese");
        validate_score(period.scores.math, record.student_id, "math");
        validate_score(period.scores.english, record.student_id, "english");
        for (const BehaviorEvent& event : period.events) {
            if (event.period_index != period.index) {
                throw SchemaError("student " + record.student_id + ": event period_index " +
                                  std::to_string(event.period_index) + " inside period " +
                                  std::to_string(period.index));
            }
            if (event.severity != Severity::none && event.kind != EventKind::punishment) {
                throw SchemaError("student " + record.student_id +
                                  ": severity on non-punishment event");
            }
        }
    }
}

namespace {

ordered_json scores_to_json(const SubjectScores& scores) {
    ordered_json j;
    j["chinese"] = scores.chinese ? ordered_json(*scores.chinese) : ordered_json(nullptr);
    j["math"] = scores.math ? ordered_json(*scores.math) : ordered_json(nullptr);
    j["english"] = scores.english ? ordered_json(*scores.english) : ordered_json(nullptr);
    return j;
}

std::optional<double> score_from_json(const ordered_json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    if (!j.at(key).is_number()) {
        throw SchemaError(std::string("score '") + key + "' is not a number or null");
    }
    return j.at(key).get<double>();
}

}  // namespace

std::string serialize_record(const StudentRecord& record) {
    ordered_json j;
    j["schema_version"] = kRecordSchemaVersion;
    j["student_id"] = record.student_id;
    j["cohort_year"] = record.cohort_year;
    j["grade_level"] = record.grade_level;
    j["dropout_next_year"] = record.dropout_next_year;
    ordered_json periods = ordered_json::array();
    for (const PeriodRecord& period : record.periods) {
        ordered_json jp;
        jp["index"] = period.index;
        jp["scores"] = scores_to_json(period.scores);
        ordered_json events = ordered_json::array();
        for (const BehaviorEvent& event : period.events) {
            ordered_json je;
            je["kind"] = to_string(event.kind);
            je["severity"] = to_string(event.severity);
            je["reason"] = event.reason;
            events.push_back(std::move(je));
        }
        jp["events"] = std::move(events);
        periods.push_back(std::move(jp));
    }
    j["periods"] = std::move(periods);
    return j.dump();
}

StudentRecord parse_record_line(const std::string& line, long line_number) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line_number);
    }
    try {
        if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kRecordSchemaVersion) {
            throw SchemaError("missing or unsupported schema_version");
        }
        StudentRecord record;
        record.student_id = j.at("student_id").get<std::string>();
        record.cohort_year = j.at("cohort_year").get<int>();
        record.grade_level = j.at("grade_level").get<int>();
        record.dropout_next_year = j.at("dropout_next_year").get<bool>();
        const auto& periods = j.at("periods");
        if (!periods.is_array() || periods.size() != kPeriodsPerYear) {
            throw SchemaError("student " + record.student_id + ": expected " +
                              std::to_string(kPeriodsPerYear) + " periods, got " +
                              std::to_string(periods.size()));
        }
        for (std::size_t p = 0; p < kPeriodsPerYear; ++p) {
            const auto& jp = periods.at(p);
            PeriodRecord& period = record.periods[p];
            period.index = jp.at("index").get<int>();
            period.scores.chinese = score_from_json(jp.at("scores"), "chinese");
            period.scores.math = score_from_json(jp.at("scores"), "math");
            period.scores.english = score_from_json(jp.at("scores"), "english");
            for (const auto& je : jp.at("events")) {
                BehaviorEvent event;
                event.kind = event_kind_from_string(je.at("kind").get<std::string>());
                event.severity = je.contains("severity")
                                     ? severity_from_string(je.at("severity").get<std::string>())
                                     : Severity::none;
                event.reason = je.contains("reason") ? je.at("reason").get<std::string>() : "";
                event.period_index = period.index;
                period.events.push_back(std::move(event));
            }
        }
        validate_record(record);
        return record;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad record: ") + e.what(), line_number);
    }
}

Cohort load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open record file: " + path);
    }
    Cohort cohort;
    cohort.source = path;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        StudentRecord record = parse_record_line(line, line_number);
        if (!seen_ids.insert(record.student_id).second) {
            throw SchemaError("duplicate student_id '" + record.student_id + "' at line " +
                              std::to_string(line_number));
        }
        cohort.records.push_back(std::move(record));
    }
    return cohort;
}

void save_records(const Cohort& cohort, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write record file: " + path);
    }
    for (const StudentRecord& record : cohort.records) {
        out << serialize_record(record) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

std::string render_period_summary(const PeriodRecord& period) {
    int counts[kEventKindCount] = {0, 0, 0, 0};
    std::string reasons[kEventKindCount];
    for (const BehaviorEvent& event : period.events) {
        const auto k = static_cast<std::size_t>(event.kind);
        if (counts[k] > 0) {
            reasons[k] += "; ";
        }
        reasons[k] += event.reason;
        ++counts[k];
    }
    std::ostringstream out;
    out << "During this period, the student was absent "
        << counts[static_cast<int>(EventKind::absence)] << " times, with reasons including "
        << reasons[static_cast<int>(EventKind::absence)] << ", received "
        << counts[static_cast<int>(EventKind::reward)] << " rewards, for reasons such as "
        << reasons[static_cast<int>(EventKind::reward)] << ", faced "
        << counts[static_cast<int>(EventKind::punishment)] << " punishments, due to "
        << reasons[static_cast<int>(EventKind::punishment)] << ", and participated in "
        << counts[static_cast<int>(EventKind::activity)] << " activities, involving "
        << reasons[static_cast<int>(EventKind::activity)] << ".";
    return out.str();
}

DifferenceReport cohort_report(const Cohort& cohort) {
    if (cohort.records.empty()) {
        throw ArgumentError("cohort_report requires a non-empty cohort");
    }
    DifferenceReport report;
    // Per-student event counts by group and kind.
    std::vector<std::int64_t> counts[2][kEventKindCount];
    std::set<std::string> tokens[2][2];  // [group][punishment=0, activity=1]
    for (const StudentRecord& record : cohort.records) {
        const int group = record.dropout_next_year ? 0 : 1;
        ++report.group_size[group];
        std::int64_t per_kind[kEventKindCount] = {0, 0, 0, 0};
        for (const PeriodRecord& period : record.periods) {
            for (const BehaviorEvent& event : period.events) {
                ++per_kind[static_cast<int>(event.kind)];
                if (event.kind == EventKind::punishment || event.kind == EventKind::activity) {
                    const int slot = event.kind == EventKind::punishment ? 0 : 1;
                    for (const std::string& tok : tokenize(event.reason)) {
                        tokens[group][slot].insert(tok);
                    }
                }
            }
        }
        for (int k = 0; k < kEventKindCount; ++k) {
            counts[group][k].push_back(per_kind[k]);
        }
    }
    for (int g = 0; g < 2; ++g) {
        for (int k = 0; k < kEventKindCount; ++k) {
            EventStats& stats = report.stats[g][k];
            const auto& values = counts[g][k];
            if (values.empty()) {
                continue;  // group absent from the cohort
            }
            stats.present = true;
            for (const std::int64_t v : values) {
                stats.total += v;
            }
            const double n = static_cast<double>(values.size());
            stats.mean = static_cast<double>(stats.total) / n;
            double ss = 0.0;
            for (const std::int64_t v : values) {
                const double d = static_cast<double>(v) - stats.mean;
                ss += d * d;
            }
            stats.stddev = std::sqrt(ss / n);
        }
    }
    for (int slot = 0; slot < 2; ++slot) {
        auto& exclusive = slot == 0 ? report.exclusive_punishment : report.exclusive_activity;
        for (int g = 0; g < 2; ++g) {
            const auto& own = tokens[g][slot];
            const auto& other = tokens[1 - g][slot];
            std::set_difference(own.begin(), own.end(), other.begin(), other.end(),
                                std::back_inserter(exclusive[g]));
        }
    }
    return report;
}

namespace {

std::string format_stat(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

}  // namespace

std::string format_difference_report(const DifferenceReport& report) {
    static const char* group_names[2] = {"at_risk", "not_at_risk"};
    std::ostringstream out;
    out << "group,event_kind,mean,stddev\n";
    for (int g = 0; g < 2; ++g) {
        for (int k = 0; k < kEventKindCount; ++k) {
            const EventStats& stats = report.stats[g][k];
            out << group_names[g] << ',' << to_string(static_cast<EventKind>(k)) << ',';
            if (stats.present) {
                out << format_stat(stats.mean) << ',' << format_stat(stats.stddev);
            } else {
                out << ',';
            }
            out << '\n';
        }
    }
    out << '\n';
    for (int slot = 0; slot < 2; ++slot) {
        const auto& exclusive = slot == 0 ? report.exclusive_punishment : report.exclusive_activity;
        const char* kind = slot == 0 ? "punishment" : "activity";
        for (int g = 0; g < 2; ++g) {
            out << "# exclusive tokens (" << kind << ", " << group_names[g] << "):";
            for (const std::string& tok : exclusive[g]) {
                out << ' ' << tok;
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace mcpd
