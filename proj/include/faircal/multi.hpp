#pragma once

#include <optional>
#include <string>
#include <vector>

#include "faircal/calibrate.hpp"
#include "faircal/fpgrowth.hpp"
#include "faircal/independence.hpp"

namespace faircal {

enum class MultiMode { Strong, Weak };

struct MultiCalibrationResult {
    MultiMode multi_mode = MultiMode::Weak;
    CalibrationResult result;  // assignments, bands, trace, verdict
    DependenceReport dependence;
    std::vector<FrequentItemset> subspaces;  // strong mode only
};

// Strong notion: calibrate every frequent attribute-value conjunction
// (after chi-square attribute pruning) as its own group row.
MultiCalibrationResult calibrate_strong(const std::vector<Record>& records,
                                        const std::vector<std::string>& attributes,
                                        const ThresholdGrid& grid, ConstraintMode mode, double n,
                                        std::size_t min_support = kDefaultMinSupport,
                                        double alpha = 0.01);

// Weak notion: one joint table whose rows are all values of all kept
// attributes (K_1 + ... + K_m rows).
MultiCalibrationResult calibrate_weak(const std::vector<Record>& records,
                                      const std::vector<std::string>& attributes,
                                      const ThresholdGrid& grid, ConstraintMode mode, double n,
                                      std::size_t min_group_support = kDefaultMinSupport,
                                      double alpha = 0.01);

struct Decision {
    int prediction = 0;
    double threshold = 0.0;
    std::optional<GroupKey> matched;  // empty when the fallback applied
    bool fallback_used = false;
    bool missing_attribute = false;
};

// Single-attribute inference: look up the record's value, else fallback.
Decision apply_single(const CalibrationResult& result, const Record& record);

// Multi-attribute inference. Strong: most-specific matching subspace
// (tie: smallest canonical key). Weak: maximum over the per-attribute
// thresholds that match; unmatched slots use the fallback.
Decision apply_multi(const MultiCalibrationResult& result, const Record& record);

struct PopulationRates {
    GroupKey key;
    RateCell cell;
    std::optional<double> fpr;
    std::optional<double> tpr;
    std::optional<double> fnr;
};

struct AuditOutcome {
    std::vector<PopulationRates> populations;
    std::optional<Verdict> verdict;  // absent when < 2 populations have defined rates
    bool conforming = false;
};

// Realized rates under apply_* over every audited population, re-checked
// against the band. Reported, not asserted: threshold composition can move
// realized rates off the per-row table values.
AuditOutcome post_audit_single(const CalibrationResult& result, const std::vector<Record>& records,
                               double n, ConstraintMode mode);
AuditOutcome post_audit_multi(const MultiCalibrationResult& result,
                              const std::vector<Record>& records, double n, ConstraintMode mode);

}  // namespace faircal
