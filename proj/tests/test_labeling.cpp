#include <doctest.h>

#include <algorithm>
#include <array>
#include <vector>

#include "mcpd/data_model.hpp"
#include "mcpd/errors.hpp"
#include "mcpd/labeling.hpp"

#include "helpers.hpp"

using namespace mcpd;
using test_helpers::add_event;
using test_helpers::make_record;

namespace {

Cohort cohort_of(std::vector<StudentRecord> records) {
    Cohort c;
    c.source = "test";
    c.records = std::move(records);
    return c;
}

void set_scores(StudentRecord& r, int period, double chinese, double math, double english) {
    auto& s = r.periods[static_cast<std::size_t>(period - 1)].scores;
    s.chinese = chinese;
    s.math = math;
    s.english = english;
}

// Ten students whose per-exam composites rotate, so the two lowest ranks on
// exam e are held by hand-computable students: student i scores 50+(i+e)%10
// in every subject on exam e.
Cohort rotating_cohort() {
    std::vector<StudentRecord> records;
    for (int i = 0; i < 10; ++i) {
        StudentRecord r = make_record("s" + std::to_string(i));
        for (int e = 1; e <= kPeriodsPerYear; ++e) {
            const double v = 50.0 + static_cast<double>((i + e) % 10);
            set_scores(r, e, v, v, v);
        }
        records.push_back(std::move(r));
    }
    return cohort_of(std::move(records));
}

}  // namespace

TEST_CASE("bottom percentile flags follow the hand ranking on ten students") {
    const Cohort cohort = rotating_cohort();
    const PercentileFlags flags = bottom_percentile_flags(cohort, 0.15);
    REQUIRE(flags.size() == 10);

    // quota = ceil(0.15 * 10) = 2 per exam, no ties by construction: on exam e
    // the flagged students are those with (i + e) % 10 in {0, 1}.
    for (int e = 1; e <= kPeriodsPerYear; ++e) {
        int flagged = 0;
        for (int i = 0; i < 10; ++i) {
            const bool expect = (i + e) % 10 <= 1;
            CHECK(flags[static_cast<std::size_t>(i)][static_cast<std::size_t>(e - 1)] == expect);
            flagged += expect ? 1 : 0;
        }
        CHECK(flagged == 2);
    }
}

TEST_CASE("a total tie at the cutoff flags every student") {
    std::vector<StudentRecord> records;
    for (int i = 0; i < 8; ++i) {
        records.push_back(make_record("s" + std::to_string(i), 60, 60, 60));
    }
    const PercentileFlags flags = bottom_percentile_flags(cohort_of(std::move(records)), 0.15);
    for (const auto& row : flags) {
        for (const bool f : row) {
            CHECK(f);
        }
    }
}

TEST_CASE("a partial tie at the cutoff extends the flagged set") {
    // Composites 90, 120, 120, 150..: quota ceil(0.15*10)=2, cutoff value is
    // the tied 120, so three students are flagged.
    std::vector<StudentRecord> records;
    records.push_back(make_record("low", 30, 30, 30));
    records.push_back(make_record("tie_a", 40, 40, 40));
    records.push_back(make_record("tie_b", 40, 40, 40));
    for (int i = 0; i < 7; ++i) {
        records.push_back(make_record("mid" + std::to_string(i), 50.0 + i, 50, 50));
    }
    const PercentileFlags flags = bottom_percentile_flags(cohort_of(std::move(records)), 0.15);
    for (int e = 0; e < kPeriodsPerYear; ++e) {
        CHECK(flags[0][static_cast<std::size_t>(e)]);
        CHECK(flags[1][static_cast<std::size_t>(e)]);
        CHECK(flags[2][static_cast<std::size_t>(e)]);
        for (std::size_t i = 3; i < flags.size(); ++i) {
            CHECK_FALSE(flags[i][static_cast<std::size_t>(e)]);
        }
    }
}

TEST_CASE("a missing subject excludes the student from that exam only") {
    // Seven participants: quota ceil(0.15*7)=2. Dropping one participant on
    // exam 3 lowers that exam's quota to ceil(0.15*6)=1.
    std::vector<StudentRecord> records;
    for (int i = 0; i < 7; ++i) {
        records.push_back(make_record("s" + std::to_string(i), 50.0 + 3 * i, 50, 50));
    }
    // The weakest student skips math on exam 3; they cannot be flagged there
    // even though their remaining subjects are the lowest in the cohort.
    records[0].periods[2].scores.math.reset();
    const PercentileFlags flags = bottom_percentile_flags(cohort_of(std::move(records)), 0.15);

    for (int e = 0; e < kPeriodsPerYear; ++e) {
        if (e == 2) continue;
        CHECK(flags[0][static_cast<std::size_t>(e)]);
        CHECK(flags[1][static_cast<std::size_t>(e)]);
        CHECK_FALSE(flags[2][static_cast<std::size_t>(e)]);
    }
    CHECK_FALSE(flags[0][2]);  // not a participant
    CHECK(flags[1][2]);        // lowest participant
    CHECK_FALSE(flags[2][2]);  // quota shrank to 1
}

TEST_CASE("percentile flag argument errors") {
    const Cohort cohort = rotating_cohort();
    CHECK_THROWS_AS(bottom_percentile_flags(cohort, 0.0), ArgumentError);
    CHECK_THROWS_AS(bottom_percentile_flags(cohort, 1.0), ArgumentError);
    CHECK_THROWS_AS(bottom_percentile_flags(cohort, -0.2), ArgumentError);
    CHECK_THROWS_AS(bottom_percentile_flags(Cohort{}, 0.15), ArgumentError);
}

TEST_CASE("academic crisis requires strictly more than three flagged exams") {
    // Students 1..9 hold constant distinct composites; student 0 is the unique
    // lowest on a chosen set of exams and the unique highest elsewhere.
    auto build = [](int low_exams) {
        std::vector<StudentRecord> records;
        StudentRecord special = make_record("s0");
        for (int e = 1; e <= kPeriodsPerYear; ++e) {
            const double v = e <= low_exams ? 30.0 : 90.0;
            set_scores(special, e, v, v, v);
        }
        records.push_back(std::move(special));
        for (int i = 1; i < 10; ++i) {
            records.push_back(make_record("s" + std::to_string(i), 50.0 + i, 50.0 + i, 50.0 + i));
        }
        return cohort_of(std::move(records));
    };

    // quota 2: on student 0's low exams the flags go to {s0, s1}; elsewhere to
    // {s1, s2}. So s1 accrues 6 flags, s2 accrues 6 - low_exams.
    const std::vector<bool> four = label_academic_crisis(build(4));
    CHECK(four[0]);
    CHECK(four[1]);
    CHECK_FALSE(four[2]);
    for (std::size_t i = 3; i < 10; ++i) {
        CHECK_FALSE(four[i]);
    }

    const std::vector<bool> three = label_academic_crisis(build(3));
    CHECK_FALSE(three[0]);  // 3 flags is not "more than 3"
    CHECK(three[1]);
    CHECK_FALSE(three[2]);

    const std::vector<bool> none = label_academic_crisis(build(0));
    CHECK_FALSE(none[0]);
}

TEST_CASE("behavioral crisis needs both a major and a minor punishment") {
    StudentRecord both = make_record("both");
    add_event(both, 2, EventKind::punishment, Severity::major, "fighting");
    add_event(both, 5, EventKind::punishment, Severity::minor, "late");
    CHECK(label_behavioral_crisis(both));

    StudentRecord majors = make_record("majors");
    add_event(majors, 1, EventKind::punishment, Severity::major, "fighting");
    add_event(majors, 3, EventKind::punishment, Severity::major, "fighting");
    CHECK_FALSE(label_behavioral_crisis(majors));

    StudentRecord clean = make_record("clean");
    CHECK_FALSE(label_behavioral_crisis(clean));

    // Severity on non-punishment events does not count.
    StudentRecord decorated = make_record("decorated");
    add_event(decorated, 2, EventKind::punishment, Severity::major, "fighting");
    add_event(decorated, 4, EventKind::reward, Severity::minor, "award");
    CHECK_FALSE(label_behavioral_crisis(decorated));
}

TEST_CASE("time crisis is the conjunction of activity count and year rank") {
    // Year-average composites ascend with the student index, so the bottom-15%
    // set over 10 students is {s0, s1}.
    std::vector<StudentRecord> records;
    for (int i = 0; i < 10; ++i) {
        records.push_back(make_record("s" + std::to_string(i), 40.0 + 2 * i, 40, 40));
    }
    for (int t = 1; t <= 3; ++t) {
        add_event(records[0], t, EventKind::activity);  // low rank, 3 activities
    }
    add_event(records[1], 1, EventKind::activity);  // low rank, only 2 activities
    add_event(records[1], 2, EventKind::activity);
    for (int t = 1; t <= 5; ++t) {
        add_event(records[9], t, EventKind::activity);  // busy but high scoring
    }
    const std::vector<bool> labels = label_time_crisis(cohort_of(std::move(records)), 0.15);
    CHECK(labels[0]);
    CHECK_FALSE(labels[1]);  // "more than 2 activities" unmet
    CHECK_FALSE(labels[9]);  // rank unmet
    for (std::size_t i = 2; i < 9; ++i) {
        CHECK_FALSE(labels[i]);
    }
}

TEST_CASE("time crisis averages only the exams the student sat") {
    // Student sat only exam 1 with the lowest composite; the average must use
    // that single exam rather than treating missing exams as zeros.
    std::vector<StudentRecord> records;
    StudentRecord sparse = make_record("sparse", 30, 30, 30);
    for (int e = 2; e <= kPeriodsPerYear; ++e) {
        sparse.periods[static_cast<std::size_t>(e - 1)].scores.english.reset();
    }
    for (int t = 1; t <= 3; ++t) {
        add_event(sparse, t, EventKind::activity);
    }
    records.push_back(std::move(sparse));
    for (int i = 1; i < 10; ++i) {
        records.push_back(make_record("s" + std::to_string(i), 50.0 + i, 50, 50));
    }
    const std::vector<bool> labels = label_time_crisis(cohort_of(std::move(records)), 0.15);
    CHECK(labels[0]);
}

TEST_CASE("labels are independent of record order") {
    Cohort cohort = rotating_cohort();
    add_event(cohort.records[3], 1, EventKind::punishment, Severity::major, "fighting");
    add_event(cohort.records[3], 2, EventKind::punishment, Severity::minor, "late");
    for (int t = 1; t <= 4; ++t) {
        add_event(cohort.records[7], t, EventKind::activity);
    }
    cohort.records[5].dropout_next_year = true;

    Cohort reversed = cohort;
    std::reverse(reversed.records.begin(), reversed.records.end());

    const std::vector<LabelSet> a = compute_labels(cohort);
    const std::vector<LabelSet> b = compute_labels(reversed);
    REQUIRE(a.size() == b.size());
    for (const LabelSet& la : a) {
        const auto it = std::find_if(b.begin(), b.end(), [&](const LabelSet& lb) {
            return lb.student_id == la.student_id;
        });
        REQUIRE(it != b.end());
        CHECK(it->dropout == la.dropout);
        CHECK(it->academic_crisis == la.academic_crisis);
        CHECK(it->behavioral_crisis == la.behavioral_crisis);
        CHECK(it->time_crisis == la.time_crisis);
    }
}

TEST_CASE("adding a top student leaves existing flags unchanged while the quota holds") {
    const Cohort base = rotating_cohort();
    const PercentileFlags before = bottom_percentile_flags(base, 0.15);

    Cohort extended = base;
    extended.records.push_back(make_record("top", 99, 99, 99));
    // ceil(0.15 * 11) = 2, same quota as with 10 students.
    const PercentileFlags after = bottom_percentile_flags(extended, 0.15);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i] == after[i]);
    }
    for (const bool f : after.back()) {
        CHECK_FALSE(f);
    }
}

TEST_CASE("compute_labels wires ids, dropout and the three rules together") {
    std::vector<StudentRecord> records;
    for (int i = 0; i < 10; ++i) {
        records.push_back(make_record("stu" + std::to_string(i), 40.0 + 2 * i, 40, 40));
    }
    records[0].dropout_next_year = true;
    for (int t = 1; t <= 3; ++t) {
        add_event(records[0], t, EventKind::activity);
    }
    add_event(records[2], 1, EventKind::punishment, Severity::major, "fighting");
    add_event(records[2], 6, EventKind::punishment, Severity::minor, "late");

    const Cohort cohort = cohort_of(std::move(records));
    const std::vector<LabelSet> labels = compute_labels(cohort);
    REQUIRE(labels.size() == 10);
    CHECK(labels[0].student_id == "stu0");
    CHECK(labels[0].dropout);
    CHECK(labels[0].academic_crisis);  // lowest on all six exams
    CHECK(labels[0].time_crisis);
    CHECK_FALSE(labels[0].behavioral_crisis);
    CHECK(labels[2].behavioral_crisis);
    CHECK_FALSE(labels[2].dropout);

    const std::vector<bool> dropout = select_labels(labels, LabelTarget::dropout);
    const std::vector<bool> academic = select_labels(labels, LabelTarget::academic);
    const std::vector<bool> behavioral = select_labels(labels, LabelTarget::behavioral);
    const std::vector<bool> time = select_labels(labels, LabelTarget::time);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(dropout[i] == labels[i].dropout);
        CHECK(academic[i] == labels[i].academic_crisis);
        CHECK(behavioral[i] == labels[i].behavioral_crisis);
        CHECK(time[i] == labels[i].time_crisis);
    }
}

TEST_CASE("label target names round-trip and reject unknowns") {
    for (const LabelTarget t : {LabelTarget::dropout, LabelTarget::academic,
                                LabelTarget::behavioral, LabelTarget::time}) {
        CHECK(label_target_from_string(to_string(t)) == t);
    }
    CHECK_THROWS_AS(label_target_from_string("gpa"), ArgumentError);
    CHECK_THROWS_AS(label_target_from_string(""), ArgumentError);
}

TEST_CASE("label csv golden output") {
    std::vector<LabelSet> labels(2);
    labels[0].student_id = "a1";
    labels[0].dropout = true;
    labels[0].time_crisis = true;
    labels[1].student_id = "b2";
    labels[1].academic_crisis = true;
    labels[1].behavioral_crisis = true;
    CHECK(format_label_csv(labels) ==
          "student_id,dropout,academic_crisis,behavioral_crisis,time_crisis\n"
          "a1,1,0,0,1\n"
          "b2,0,1,1,0\n");
}
