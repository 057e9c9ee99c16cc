#include "faircal/calibrate.hpp"

#include <algorithm>
#include <cmath>

namespace faircal {

ThresholdGrid ThresholdGrid::linear(double start, double stop, double step) {
    if (!(start >= 0.0 && start < stop && stop <= 1.0))
        throw Error("threshold grid: need 0 <= start < stop <= 1");
    if (!(step > 0.0)) throw Error("threshold grid: step must be positive");
    ThresholdGrid g;
    g.start = start;
    g.stop = stop;
    g.step = step;
    for (std::size_t i = 0;; ++i) {
        const double v = start + static_cast<double>(i) * step;
        if (v > stop + 1e-12) break;
        g.values.push_back(std::min(v, 1.0));
    }
    if (g.values.size() < 2) throw Error("threshold grid: fewer than 2 values");
    return g;
}

std::size_t PerformanceTable::total_alive() const {
    std::size_t n = 0;
    for (std::size_t c : alive_counts) n += c;
    return n;
}

namespace {

// Confusion cells for one group across the whole grid, via sorted score lists.
std::vector<RateCell> group_cells(const std::vector<const Record*>& records,
                                  const ThresholdGrid& grid) {
    std::vector<double> pos, neg;
    for (const Record* r : records) {
        (r->label == 1 ? pos : neg).push_back(r->score);
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    std::vector<RateCell> cells;
    cells.reserve(grid.size());
    for (double t : grid.values) {
        RateCell c;
        const auto pit = std::lower_bound(pos.begin(), pos.end(), t);
        const auto nit = std::lower_bound(neg.begin(), neg.end(), t);
        c.tp = static_cast<long long>(pos.end() - pit);
        c.fn = static_cast<long long>(pos.size()) - c.tp;
        c.fp = static_cast<long long>(neg.end() - nit);
        c.tn = static_cast<long long>(neg.size()) - c.fp;
        cells.push_back(c);
    }
    return cells;
}

}  // namespace

TableBuildResult build_table_for_groups(const std::vector<GroupRecords>& groups,
                                        const ThresholdGrid& grid, ConstraintMode mode,
                                        std::size_t min_group_support) {
    TableBuildResult out;
    out.table.grid = grid;
    for (const auto& g : groups) {
        long long pos = 0, neg = 0;
        for (const Record* r : g.records) (r->label == 1 ? pos : neg)++;
        if (g.records.size() < min_group_support) {
            out.degenerate.push_back({g.key, "support"});
            continue;
        }
        if (mode_needs_fpr(mode) && neg == 0) {
            out.degenerate.push_back({g.key, "no-negatives"});
            continue;
        }
        if (mode_needs_tpr(mode) && pos == 0) {
            out.degenerate.push_back({g.key, "no-positives"});
            continue;
        }
        out.table.groups.push_back(g.key);
        out.table.cells.push_back(group_cells(g.records, grid));
        out.table.alive.emplace_back(grid.size(), char{1});
        out.table.group_sizes.push_back(g.records.size());
        out.table.alive_counts.push_back(grid.size());
    }
    return out;
}

TableBuildResult build_table(const std::vector<Record>& records, const std::string& attribute,
                             const ThresholdGrid& grid, ConstraintMode mode,
                             std::size_t min_group_support) {
    std::map<std::string, std::vector<const Record*>> by_value;
    for (const auto& r : records) {
        auto v = r.attr(attribute);
        if (!v) throw Error("attribute '" + attribute + "' missing from a record");
        by_value[*v].push_back(&r);
    }
    std::vector<GroupRecords> groups;
    groups.reserve(by_value.size());
    for (auto& [value, recs] : by_value)
        groups.push_back({GroupKey::single(attribute, value), std::move(recs)});
    auto out = build_table_for_groups(groups, grid, mode, min_group_support);
    if (out.table.groups.size() < 2)
        throw InsufficientGroups("insufficient groups to calibrate on '" + attribute + "'");
    return out;
}

std::size_t prune_pass(PerformanceTable& table, ConstraintMode mode, double n) {
    const std::size_t kGroups = table.groups.size();
    std::size_t pruned = 0;
    for (std::size_t col = 0; col < table.grid.size(); ++col) {
        std::vector<double> fprs, tprs;
        for (std::size_t g = 0; g < kGroups; ++g) {
            if (!table.alive[g][col]) continue;
            if (mode_needs_fpr(mode)) fprs.push_back(fpr(table.cells[g][col]));
            if (mode_needs_tpr(mode)) tprs.push_back(tpr(table.cells[g][col]));
        }
        double fpr_hi = 0.0, tpr_lo = 0.0;
        bool check_fpr = mode_needs_fpr(mode) && fprs.size() >= 2;
        bool check_tpr = mode_needs_tpr(mode) && tprs.size() >= 2;
        if (check_fpr) {
            Band b = band_of(fprs, n);
            fpr_hi = b.hi;
        }
        if (check_tpr) {
            Band b = band_of(tprs, n);
            tpr_lo = b.lo;
        }
        if (!check_fpr && !check_tpr) continue;
        for (std::size_t g = 0; g < kGroups; ++g) {
            if (!table.alive[g][col]) continue;
            if (table.alive_counts[g] <= 1) continue;  // freeze rule
            bool kill = false;
            if (check_fpr && fpr(table.cells[g][col]) > fpr_hi + kBandSlack) kill = true;
            if (check_tpr && tpr(table.cells[g][col]) < tpr_lo - kBandSlack) kill = true;
            if (kill) {
                table.alive[g][col] = 0;
                table.alive_counts[g]--;
                ++pruned;
            }
        }
    }
    return pruned;
}

namespace {

std::vector<std::size_t> select_columns(const PerformanceTable& table, double beta) {
    std::vector<std::size_t> out(table.groups.size());
    for (std::size_t g = 0; g < table.groups.size(); ++g) {
        bool found = false;
        double best = -1.0;
        std::size_t best_col = 0;
        for (std::size_t col = 0; col < table.grid.size(); ++col) {
            if (!table.alive[g][col]) continue;
            const double score = f_beta(table.cells[g][col], beta);
            if (!found || score > best) {
                found = true;
                best = score;
                best_col = col;
            }
        }
        if (!found) throw Error("select: group '" + table.groups[g].to_string() + "' has no alive entries");
        out[g] = best_col;
    }
    return out;
}

// The iterative loop can paint itself into a corner: a one-sided column prune
// or an eviction may discard the only entries that participate in a conforming
// assignment. When every violating group is frozen, small instances get a last
// chance: enumerate all |grid|^K assignments over the full table (ignoring
// alive flags) and return the conforming one with the highest total f_beta.
constexpr double kRescueBudget = 200000.0;

std::optional<std::vector<std::size_t>> exhaustive_rescue(const PerformanceTable& table,
                                                          ConstraintMode mode, double n,
                                                          double beta) {
    const std::size_t k = table.groups.size();
    const std::size_t m = table.grid.size();
    double combos = 1.0;
    for (std::size_t g = 0; g < k; ++g) {
        combos *= static_cast<double>(m);
        if (combos > kRescueBudget) return std::nullopt;
    }

    std::optional<std::vector<std::size_t>> best;
    double best_score = -1.0;
    std::vector<std::size_t> idx(k, 0);
    std::vector<double> fprs(k), tprs(k);
    while (true) {
        for (std::size_t g = 0; g < k; ++g) {
            const RateCell& c = table.cells[g][idx[g]];
            if (mode_needs_fpr(mode)) fprs[g] = fpr(c);
            if (mode_needs_tpr(mode)) tprs[g] = tpr(c);
        }
        const Verdict v = conforms(mode_needs_fpr(mode) ? std::optional(fprs) : std::nullopt,
                                   mode_needs_tpr(mode) ? std::optional(tprs) : std::nullopt,
                                   mode, n);
        if (v.conforming) {
            double score = 0.0;
            for (std::size_t g = 0; g < k; ++g) score += f_beta(table.cells[g][idx[g]], beta);
            if (score > best_score) {
                best_score = score;
                best = idx;
            }
        }
        std::size_t d = 0;
        while (d < k && ++idx[d] == m) idx[d++] = 0;
        if (d == k) break;
    }
    return best;
}

}  // namespace

std::map<GroupKey, double> select(const PerformanceTable& table, double beta) {
    auto cols = select_columns(table, beta);
    std::map<GroupKey, double> out;
    for (std::size_t g = 0; g < table.groups.size(); ++g)
        out[table.groups[g]] = table.grid.values[cols[g]];
    return out;
}

double fallback_threshold(const std::vector<Record>& records, const ThresholdGrid& grid,
                          double beta) {
    if (records.empty()) throw Error("empty group");
    std::vector<const Record*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records) ptrs.push_back(&r);
    auto cells = group_cells(ptrs, grid);
    double best = -1.0;
    double best_t = grid.values.front();
    for (std::size_t col = 0; col < grid.size(); ++col) {
        const double score = f_beta(cells[col], beta);
        if (score > best) {
            best = score;
            best_t = grid.values[col];
        }
    }
    return best_t;
}

CalibrationResult run_prune_select(PerformanceTable table, ConstraintMode mode, double n,
                                   double beta) {
    const std::size_t kGroups = table.groups.size();
    if (kGroups < 2) throw InsufficientGroups("insufficient groups to calibrate");

    CalibrationResult res;
    res.mode = mode;
    res.n = n;
    res.beta = beta;
    res.groups = table.groups;

    const std::size_t max_iters = kGroups * table.grid.size();
    for (std::size_t iter = 1; iter <= max_iters; ++iter) {
        res.iterations = iter;
        IterationRecord rec;
        rec.iteration = iter;
        rec.pruned = prune_pass(table, mode, n);

        const auto cols = select_columns(table, beta);
        std::optional<std::vector<double>> fprs, tprs;
        if (mode_needs_fpr(mode)) {
            fprs.emplace();
            for (std::size_t g = 0; g < kGroups; ++g) fprs->push_back(fpr(table.cells[g][cols[g]]));
            rec.selected_fpr = *fprs;
        }
        if (mode_needs_tpr(mode)) {
            tprs.emplace();
            for (std::size_t g = 0; g < kGroups; ++g) tprs->push_back(tpr(table.cells[g][cols[g]]));
            rec.selected_tpr = *tprs;
        }
        Verdict verdict = conforms(fprs, tprs, mode, n);
        rec.fpr_band = verdict.fpr_band;
        rec.tpr_band = verdict.tpr_band;

        if (verdict.conforming) {
            res.conforming = true;
            res.fpr_band = verdict.fpr_band;
            res.tpr_band = verdict.tpr_band;
            for (std::size_t g = 0; g < kGroups; ++g)
                res.assignments[table.groups[g]] = table.grid.values[cols[g]];
            res.trace.push_back(std::move(rec));
            return res;
        }

        if (rec.pruned == 0) {
            // Stalled: evict the worst offender's selected entry.
            const auto violations = verdict.combined_violations();
            bool found = false;
            std::size_t worst = 0;
            for (std::size_t g = 0; g < kGroups; ++g) {
                if (violations[g] <= 0.0) continue;
                if (table.alive_counts[g] <= 1) continue;  // frozen
                if (!found || violations[g] > violations[worst] ||
                    (violations[g] == violations[worst] &&
                     (table.group_sizes[g] > table.group_sizes[worst] ||
                      (table.group_sizes[g] == table.group_sizes[worst] &&
                       table.groups[g] < table.groups[worst])))) {
                    found = true;
                    worst = g;
                }
            }
            if (!found) {
                // All violating groups frozen: try the bounded exhaustive
                // rescue before reporting non-conformance.
                if (auto rescue = exhaustive_rescue(table, mode, n, beta)) {
                    std::optional<std::vector<double>> rfprs, rtprs;
                    if (mode_needs_fpr(mode)) {
                        rfprs.emplace();
                        for (std::size_t g = 0; g < kGroups; ++g)
                            rfprs->push_back(fpr(table.cells[g][(*rescue)[g]]));
                        rec.selected_fpr = *rfprs;
                    }
                    if (mode_needs_tpr(mode)) {
                        rtprs.emplace();
                        for (std::size_t g = 0; g < kGroups; ++g)
                            rtprs->push_back(tpr(table.cells[g][(*rescue)[g]]));
                        rec.selected_tpr = *rtprs;
                    }
                    const Verdict rv = conforms(rfprs, rtprs, mode, n);
                    rec.fpr_band = rv.fpr_band;
                    rec.tpr_band = rv.tpr_band;
                    res.conforming = true;
                    res.exhaustive_fallback = true;
                    res.fpr_band = rv.fpr_band;
                    res.tpr_band = rv.tpr_band;
                    for (std::size_t g = 0; g < kGroups; ++g)
                        res.assignments[table.groups[g]] = table.grid.values[(*rescue)[g]];
                    res.trace.push_back(std::move(rec));
                    return res;
                }
                res.conforming = false;
                res.fpr_band = verdict.fpr_band;
                res.tpr_band = verdict.tpr_band;
                for (std::size_t g = 0; g < kGroups; ++g)
                    res.assignments[table.groups[g]] = table.grid.values[cols[g]];
                res.trace.push_back(std::move(rec));
                return res;
            }
            table.alive[worst][cols[worst]] = 0;
            table.alive_counts[worst]--;
            rec.evicted = true;
            rec.evicted_group = table.groups[worst];
        }
        res.trace.push_back(std::move(rec));
    }
    throw Error("prune/select loop exceeded its iteration bound");  // unreachable
}

CalibrationResult calibrate(const std::vector<Record>& records, const std::string& attribute,
                            const ThresholdGrid& grid, ConstraintMode mode, double n,
                            std::size_t min_group_support) {
    auto built = build_table(records, attribute, grid, mode, min_group_support);
    const double beta = selection_beta(mode);
    CalibrationResult res = run_prune_select(std::move(built.table), mode, n, beta);
    res.degenerate = std::move(built.degenerate);
    res.fallback_threshold = fallback_threshold(records, grid, beta);
    return res;
}

}  // namespace faircal
