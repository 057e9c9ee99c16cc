#include "faircal/multi.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace faircal {

MultiCalibrationResult calibrate_strong(const std::vector<Record>& records,
                                        const std::vector<std::string>& attributes,
                                        const ThresholdGrid& grid, ConstraintMode mode, double n,
                                        std::size_t min_support, double alpha) {
    MultiCalibrationResult out;
    out.multi_mode = MultiMode::Strong;
    out.dependence = prune_attributes(records, attributes, alpha);
    out.subspaces = mine(records, out.dependence.kept, min_support);
    if (out.subspaces.size() < 2) throw InsufficientGroups("insufficient subspaces");

    std::vector<GroupRecords> groups;
    groups.reserve(out.subspaces.size());
    for (const auto& s : out.subspaces) {
        GroupRecords g;
        g.key = s.key;
        for (const auto& r : records)
            if (s.key.matches(r)) g.records.push_back(&r);
        groups.push_back(std::move(g));
    }
    auto built = build_table_for_groups(groups, grid, mode, min_support);
    if (built.table.groups.size() < 2) throw InsufficientGroups("insufficient subspaces");
    const double beta = selection_beta(mode);
    out.result = run_prune_select(std::move(built.table), mode, n, beta);
    out.result.degenerate = std::move(built.degenerate);
    out.result.fallback_threshold = fallback_threshold(records, grid, beta);
    return out;
}

MultiCalibrationResult calibrate_weak(const std::vector<Record>& records,
                                      const std::vector<std::string>& attributes,
                                      const ThresholdGrid& grid, ConstraintMode mode, double n,
                                      std::size_t min_group_support, double alpha) {
    MultiCalibrationResult out;
    out.multi_mode = MultiMode::Weak;
    out.dependence = prune_attributes(records, attributes, alpha);

    std::vector<GroupRecords> groups;
    for (const auto& attr : out.dependence.kept) {
        std::map<std::string, std::vector<const Record*>> by_value;
        for (const auto& r : records) by_value[*r.attr(attr)].push_back(&r);
        for (auto& [value, recs] : by_value)
            groups.push_back({GroupKey::single(attr, value), std::move(recs)});
    }
    auto built = build_table_for_groups(groups, grid, mode, min_group_support);
    if (built.table.groups.size() < 2)
        throw InsufficientGroups("insufficient groups to calibrate");
    const double beta = selection_beta(mode);
    out.result = run_prune_select(std::move(built.table), mode, n, beta);
    out.result.degenerate = std::move(built.degenerate);
    out.result.fallback_threshold = fallback_threshold(records, grid, beta);
    return out;
}

Decision apply_single(const CalibrationResult& result, const Record& record) {
    Decision d;
    d.threshold = result.fallback_threshold;
    d.fallback_used = true;
    if (!result.assignments.empty()) {
        const std::string& attr = result.assignments.begin()->first.items().front().first;
        auto v = record.attr(attr);
        if (!v) {
            d.missing_attribute = true;
        } else {
            auto it = result.assignments.find(GroupKey::single(attr, *v));
            if (it != result.assignments.end()) {
                d.threshold = it->second;
                d.matched = it->first;
                d.fallback_used = false;
            }
        }
    }
    d.prediction = classify(record, d.threshold);
    return d;
}

Decision apply_multi(const MultiCalibrationResult& result, const Record& record) {
    const auto& assignments = result.result.assignments;
    Decision d;
    if (result.multi_mode == MultiMode::Strong) {
        // Most-specific matching subspace; map order gives the smallest
        // canonical key among equal sizes.
        const std::pair<const GroupKey, double>* best = nullptr;
        for (const auto& entry : assignments) {
            if (!entry.first.matches(record)) continue;
            if (!best || entry.first.size() > best->first.size()) best = &entry;
        }
        if (best) {
            d.threshold = best->second;
            d.matched = best->first;
        } else {
            d.threshold = result.result.fallback_threshold;
            d.fallback_used = true;
        }
        for (const auto& attr : result.dependence.kept)
            if (!record.attr(attr)) d.missing_attribute = true;
    } else {
        // Weak: max over per-attribute thresholds, fallback for empty slots.
        double effective = -1.0;
        for (const auto& attr : result.dependence.kept) {
            double slot = result.result.fallback_threshold;
            bool slot_fallback = true;
            auto v = record.attr(attr);
            if (!v) {
                d.missing_attribute = true;
            } else {
                auto it = assignments.find(GroupKey::single(attr, *v));
                if (it != assignments.end()) {
                    slot = it->second;
                    slot_fallback = false;
                    if (slot > effective) d.matched = it->first;
                }
            }
            if (slot_fallback && slot > effective) d.matched.reset();
            if (slot_fallback) d.fallback_used = true;
            effective = std::max(effective, slot);
        }
        if (effective < 0.0) {
            effective = result.result.fallback_threshold;
            d.fallback_used = true;
        }
        d.threshold = effective;
    }
    d.prediction = classify(record, d.threshold);
    return d;
}

namespace {

AuditOutcome audit_populations(const std::vector<GroupKey>& populations,
                               const std::vector<Record>& records,
                               const std::vector<int>& predictions, double n,
                               ConstraintMode mode) {
    AuditOutcome out;
    std::vector<double> fprs, tprs;
    for (const auto& key : populations) {
        PopulationRates p;
        p.key = key;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!key.matches(records[i])) continue;
            if (records[i].label == 1) {
                predictions[i] == 1 ? ++p.cell.tp : ++p.cell.fn;
            } else {
                predictions[i] == 1 ? ++p.cell.fp : ++p.cell.tn;
            }
        }
        p.fpr = try_fpr(p.cell);
        p.tpr = try_tpr(p.cell);
        p.fnr = try_fnr(p.cell);
        bool defined = true;
        if (mode_needs_fpr(mode) && !p.fpr) defined = false;
        if (mode_needs_tpr(mode) && !p.tpr) defined = false;
        if (defined) {
            if (mode_needs_fpr(mode)) fprs.push_back(*p.fpr);
            if (mode_needs_tpr(mode)) tprs.push_back(*p.tpr);
        }
        out.populations.push_back(std::move(p));
    }
    const std::size_t family = std::max(fprs.size(), tprs.size());
    if (family >= 2) {
        out.verdict = conforms(mode_needs_fpr(mode) ? std::optional(fprs) : std::nullopt,
                               mode_needs_tpr(mode) ? std::optional(tprs) : std::nullopt, mode, n);
        out.conforming = out.verdict->conforming;
    }
    return out;
}

std::vector<int> predict_all(const std::vector<Record>& records,
                             const std::function<Decision(const Record&)>& apply_fn) {
    std::vector<int> preds;
    preds.reserve(records.size());
    for (const auto& r : records) preds.push_back(apply_fn(r).prediction);
    return preds;
}

}  // namespace

AuditOutcome post_audit_single(const CalibrationResult& result, const std::vector<Record>& records,
                               double n, ConstraintMode mode) {
    auto preds = predict_all(records, [&](const Record& r) { return apply_single(result, r); });
    return audit_populations(result.groups, records, preds, n, mode);
}

AuditOutcome post_audit_multi(const MultiCalibrationResult& result,
                              const std::vector<Record>& records, double n, ConstraintMode mode) {
    auto preds = predict_all(records, [&](const Record& r) { return apply_multi(result, r); });
    std::vector<GroupKey> populations;
    if (result.multi_mode == MultiMode::Strong) {
        for (const auto& s : result.subspaces) populations.push_back(s.key);
    } else {
        std::set<GroupKey> seen;
        for (const auto& attr : result.dependence.kept) {
            for (const auto& r : records) {
                auto v = r.attr(attr);
                if (v) seen.insert(GroupKey::single(attr, *v));
            }
        }
        populations.assign(seen.begin(), seen.end());
    }
    return audit_populations(populations, records, preds, n, mode);
}

}  // namespace faircal
