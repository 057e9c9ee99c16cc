#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "faircal/band.hpp"
#include "faircal/core.hpp"

namespace faircal {

inline constexpr std::size_t kDefaultMinSupport = 100;

// Ascending linear grid of candidate decision thresholds.
struct ThresholdGrid {
    double start = 0.01;
    double stop = 0.99;
    double step = 0.01;
    std::vector<double> values;

    static ThresholdGrid linear(double start, double stop, double step);
    static ThresholdGrid defaults() { return linear(0.01, 0.99, 0.01); }
    std::size_t size() const { return values.size(); }
};

struct DegenerateGroup {
    GroupKey key;
    std::string reason;  // "support" | "no-positives" | "no-negatives"
};

// Rows are calibration groups, columns are grid thresholds. alive marks
// candidate-set membership for the prune/select loop.
struct PerformanceTable {
    std::vector<GroupKey> groups;
    ThresholdGrid grid;
    std::vector<std::vector<RateCell>> cells;   // [group][threshold]
    std::vector<std::vector<char>> alive;       // [group][threshold]
    std::vector<std::size_t> group_sizes;       // record count per group
    std::vector<std::size_t> alive_counts;      // alive entries per group

    std::size_t total_alive() const;
};

// A calibration group: identifying key plus the records that belong to it.
// Rows may overlap (strong multi-attribute mode calibrates nested subspaces).
struct GroupRecords {
    GroupKey key;
    std::vector<const Record*> records;
};

struct TableBuildResult {
    PerformanceTable table;
    std::vector<DegenerateGroup> degenerate;
};

// Builds the cells for the given groups; groups failing the support floor or
// lacking a class the mode requires are set aside as degenerate.
TableBuildResult build_table_for_groups(const std::vector<GroupRecords>& groups,
                                        const ThresholdGrid& grid, ConstraintMode mode,
                                        std::size_t min_group_support);

// Single-attribute table: one row per observed value of `attribute`.
TableBuildResult build_table(const std::vector<Record>& records, const std::string& attribute,
                             const ThresholdGrid& grid, ConstraintMode mode,
                             std::size_t min_group_support);

// One pruning pass: per column, entries one-sidedly outside the n-sigma bound
// are marked dead, except a group's last alive entry. Returns entries pruned.
std::size_t prune_pass(PerformanceTable& table, ConstraintMode mode, double n);

// Per group, the alive threshold maximizing f_beta; ties go to the smaller
// threshold.
std::map<GroupKey, double> select(const PerformanceTable& table, double beta);

struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t pruned = 0;
    bool evicted = false;
    GroupKey evicted_group;  // meaningful only when evicted
    std::vector<double> selected_fpr;
    std::vector<double> selected_tpr;
    std::optional<Band> fpr_band;
    std::optional<Band> tpr_band;
};

struct CalibrationResult {
    std::map<GroupKey, double> assignments;
    double fallback_threshold = 0.0;
    ConstraintMode mode = ConstraintMode::Both;
    double n = 2.0;
    double beta = 1.0;
    bool conforming = false;
    std::optional<Band> fpr_band;
    std::optional<Band> tpr_band;
    std::vector<IterationRecord> trace;
    std::vector<DegenerateGroup> degenerate;
    std::vector<GroupKey> groups;  // calibrated rows, table order
    std::size_t iterations = 0;
    // True when the iterative loop stalled with every violating group frozen
    // and the assignment was instead recovered by bounded exhaustive search
    // over the full grid (small instances only).
    bool exhaustive_fallback = false;
};

// Global f_beta-maximizing grid threshold over all records pooled.
double fallback_threshold(const std::vector<Record>& records, const ThresholdGrid& grid,
                          double beta);

// The prune/select loop over an already-built table.
CalibrationResult run_prune_select(PerformanceTable table, ConstraintMode mode, double n,
                                   double beta);

// Full single-attribute calibration.
CalibrationResult calibrate(const std::vector<Record>& records, const std::string& attribute,
                            const ThresholdGrid& grid, ConstraintMode mode, double n,
                            std::size_t min_group_support = kDefaultMinSupport);

}  // namespace faircal
