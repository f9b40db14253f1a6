#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "mcpd/data_model.hpp"

namespace test_helpers {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / ("mcpd_test_" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("cannot create scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Valid six-period record with constant scores and no events.
inline mcpd::StudentRecord make_record(const std::string& id, double chinese = 70.0,
                                       double math = 70.0, double english = 70.0) {
    mcpd::StudentRecord r;
    r.student_id = id;
    r.cohort_year = 2023;
    r.grade_level = 8;
    for (int t = 1; t <= mcpd::kPeriodsPerYear; ++t) {
        auto& p = r.periods[static_cast<std::size_t>(t - 1)];
        p.index = t;
        p.scores.chinese = chinese;
        p.scores.math = math;
        p.scores.english = english;
    }
    return r;
}

inline void add_event(mcpd::StudentRecord& r, int period, mcpd::EventKind kind,
                      mcpd::Severity severity = mcpd::Severity::none, std::string reason = "") {
    mcpd::BehaviorEvent e;
    e.kind = kind;
    e.severity = severity;
    e.reason = std::move(reason);
    e.period_index = period;
    r.periods[static_cast<std::size_t>(period - 1)].events.push_back(std::move(e));
}

}  // namespace test_helpers
