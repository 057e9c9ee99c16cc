#include <doctest.h>

#include <random>

#include "faircal/dataset.hpp"
#include "faircal/multi.hpp"

using namespace faircal;

namespace {

Record rec(double score, int label, std::vector<std::pair<std::string, std::string>> attrs) {
    Record r;
    r.score = score;
    r.label = label;
    for (auto& [k, v] : attrs) r.set_attr(k, v);
    return r;
}

// Four balanced cells over two binary attributes. Scores and labels depend
// only on the within-cell index, so every cell carries the exact same score
// population and every mined subspace has identical rate columns.
std::vector<Record> two_binary_attrs(std::size_t per_cell) {
    std::vector<Record> out;
    for (const std::string& c : {"US", "IN"}) {
        for (const std::string& x : {"USD", "INR"}) {
            for (std::size_t i = 0; i < per_cell; ++i) {
                const int label = (i % 4 == 0) ? 1 : 0;
                const double frac = static_cast<double>(i % 499) / 498.0;
                const double score = label == 1 ? 0.5 + 0.5 * frac : 0.6 * frac;
                out.push_back(rec(score, label, {{"country", c}, {"currency", x}}));
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("strong and weak with one attribute degenerate to calibrate-single") {
    auto records = synth_biased(5, 6000, 0.25, 51);
    const ThresholdGrid grid = ThresholdGrid::defaults();
    auto single = calibrate(records, "country", grid, ConstraintMode::Both, 2.0, 100);
    auto strong = calibrate_strong(records, {"country"}, grid, ConstraintMode::Both, 2.0, 100);
    auto weak = calibrate_weak(records, {"country"}, grid, ConstraintMode::Both, 2.0, 100);

    CHECK(strong.result.assignments == single.assignments);
    CHECK(weak.result.assignments == single.assignments);
    CHECK(strong.result.conforming == single.conforming);
    CHECK(weak.result.conforming == single.conforming);
    CHECK(strong.result.fallback_threshold == single.fallback_threshold);
}

TEST_CASE("strong: dependent attribute is dropped before mining") {
    std::vector<Record> records;
    std::mt19937_64 rng(52);
    for (int i = 0; i < 3000; ++i) {
        const std::string v = "v" + std::to_string(rng() % 3);
        const int label = (rng() % 100) < 25 ? 1 : 0;
        const double score = label ? 0.4 + 0.6 * static_cast<double>(rng() % 1000) / 999.0
                                   : 0.7 * static_cast<double>(rng() % 1000) / 999.0;
        records.push_back(rec(score, label, {{"a", v}, {"b", "m" + v}}));
    }
    auto strong = calibrate_strong(records, {"a", "b"}, ThresholdGrid::defaults(),
                                   ConstraintMode::Both, 2.0, 100);
    CHECK(strong.dependence.kept.size() == 1);
    for (const auto& s : strong.subspaces) CHECK(s.key.size() == 1);
}

TEST_CASE("strong: two independent binary attributes mine 8 subspaces") {
    auto records = two_binary_attrs(1000);
    auto strong = calibrate_strong(records, {"country", "currency"}, ThresholdGrid::defaults(),
                                   ConstraintMode::Both, 2.0, 100);
    CHECK(strong.dependence.kept.size() == 2);
    REQUIRE(strong.subspaces.size() == 8);
    std::size_t singles = 0, pairs = 0;
    for (const auto& s : strong.subspaces) (s.key.size() == 1 ? singles : pairs)++;
    CHECK(singles == 4);
    CHECK(pairs == 4);
    CHECK(strong.result.conforming);
    auto audit = post_audit_multi(strong, records, 2.0, ConstraintMode::Both);
    CHECK(audit.conforming);
}

TEST_CASE("weak: joint table has K1 + K2 rows") {
    std::vector<Record> records;
    std::mt19937_64 rng(54);
    for (int i = 0; i < 7000; ++i) {
        const int label = (rng() % 100) < 25 ? 1 : 0;
        const double score = label ? 0.4 + 0.6 * static_cast<double>(rng() % 1000) / 999.0
                                   : 0.7 * static_cast<double>(rng() % 1000) / 999.0;
        records.push_back(rec(score, label,
                              {{"a", "v" + std::to_string(rng() % 3)},
                               {"b", "w" + std::to_string(rng() % 4)}}));
    }
    auto weak = calibrate_weak(records, {"a", "b"}, ThresholdGrid::defaults(),
                               ConstraintMode::Both, 2.0, 100);
    CHECK(weak.result.groups.size() == 7);
    CHECK(weak.result.assignments.size() == 7);
}

TEST_CASE("apply: strong picks the most specific matching subspace") {
    MultiCalibrationResult res;
    res.multi_mode = MultiMode::Strong;
    res.dependence.kept = {"country", "currency"};
    res.result.fallback_threshold = 0.5;
    res.result.assignments[GroupKey::single("country", "US")] = 0.6;
    res.result.assignments[GroupKey({{"country", "US"}, {"currency", "USD"}})] = 0.8;

    Record both = rec(0.7, 0, {{"country", "US"}, {"currency", "USD"}});
    Decision d = apply_multi(res, both);
    CHECK(d.threshold == 0.8);
    CHECK(d.matched == GroupKey({{"country", "US"}, {"currency", "USD"}}));
    CHECK(d.prediction == 0);

    Record only_country = rec(0.7, 0, {{"country", "US"}, {"currency", "INR"}});
    CHECK(apply_multi(res, only_country).threshold == 0.6);

    Record neither = rec(0.7, 0, {{"country", "FR"}, {"currency", "EUR"}});
    Decision f = apply_multi(res, neither);
    CHECK(f.threshold == 0.5);
    CHECK(f.fallback_used);
    CHECK(!f.matched);
}

TEST_CASE("apply: weak takes the maximum matching threshold") {
    MultiCalibrationResult res;
    res.multi_mode = MultiMode::Weak;
    res.dependence.kept = {"country", "currency"};
    res.result.fallback_threshold = 0.3;
    res.result.assignments[GroupKey::single("country", "US")] = 0.6;
    res.result.assignments[GroupKey::single("currency", "USD")] = 0.7;

    Record r = rec(0.65, 0, {{"country", "US"}, {"currency", "USD"}});
    Decision d = apply_multi(res, r);
    CHECK(d.threshold == 0.7);
    CHECK(d.prediction == 0);

    // Missing kept attribute: that slot falls back, with a warning flag.
    Record partial = rec(0.65, 0, {{"country", "US"}});
    Decision p = apply_multi(res, partial);
    CHECK(p.threshold == 0.6);
    CHECK(p.missing_attribute);
}

TEST_CASE("apply_single: lookup with fallback") {
    CalibrationResult res;
    res.fallback_threshold = 0.45;
    res.assignments[GroupKey::single("g", "a")] = 0.7;
    Record known = rec(0.69, 0, {{"g", "a"}});
    CHECK(apply_single(res, known).threshold == 0.7);
    Record unknown = rec(0.69, 0, {{"g", "zz"}});
    Decision d = apply_single(res, unknown);
    CHECK(d.threshold == 0.45);
    CHECK(d.fallback_used);
}

TEST_CASE("post_audit: single-attribute realized rates equal table rates") {
    auto records = synth_biased(5, 6000, 0.25, 55);
    auto res = calibrate(records, "country", ThresholdGrid::defaults(), ConstraintMode::Both, 2.0);
    auto audit = post_audit_single(res, records, 2.0, ConstraintMode::Both);
    CHECK(audit.conforming == res.conforming);
    // No composition in single mode: recount at the assigned threshold matches.
    for (const auto& p : audit.populations) {
        const double t = res.assignments.at(p.key);
        RateCell want;
        for (const auto& r : records) {
            if (!p.key.matches(r)) continue;
            const bool pos = r.score >= t;
            if (r.label == 1 && pos) want.tp++;
            if (r.label == 0 && pos) want.fp++;
            if (r.label == 0 && !pos) want.tn++;
            if (r.label == 1 && !pos) want.fn++;
        }
        CHECK(p.cell.tp == want.tp);
        CHECK(p.cell.fp == want.fp);
        CHECK(p.cell.tn == want.tn);
        CHECK(p.cell.fn == want.fn);
    }
}

TEST_CASE("post_audit: weak max rule never raises a population's FPR") {
    auto records = two_binary_attrs(800);
    auto weak = calibrate_weak(records, {"country", "currency"}, ThresholdGrid::defaults(),
                               ConstraintMode::FprOnly, 2.0, 100);
    auto audit = post_audit_multi(weak, records, 2.0, ConstraintMode::FprOnly);
    for (const auto& p : audit.populations) {
        REQUIRE(p.fpr.has_value());
        // FPR at the population's own assigned threshold, recounted raw.
        auto it = weak.result.assignments.find(p.key);
        if (it == weak.result.assignments.end()) continue;
        RateCell own;
        for (const auto& r : records) {
            if (!p.key.matches(r)) continue;
            const bool pos = r.score >= it->second;
            if (r.label == 0 && pos) own.fp++;
            if (r.label == 0 && !pos) own.tn++;
        }
        CHECK(*p.fpr <= fpr(own) + 1e-12);
    }
}
