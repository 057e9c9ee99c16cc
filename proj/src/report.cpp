#include "faircal/report.hpp"

#include <cmath>

namespace faircal {

std::string mode_name(ConstraintMode m) {
    switch (m) {
        case ConstraintMode::FprOnly: return "fpr";
        case ConstraintMode::TprOnly: return "tpr";
        case ConstraintMode::Both: return "both";
    }
    throw Error("invalid constraint mode");
}

ConstraintMode mode_from_name(const std::string& s) {
    if (s == "fpr") return ConstraintMode::FprOnly;
    if (s == "tpr") return ConstraintMode::TprOnly;
    if (s == "both") return ConstraintMode::Both;
    throw Error("unknown constraint mode '" + s + "' (expected fpr|tpr|both)");
}

Json group_key_to_json(const GroupKey& k) {
    Json j = Json::object();
    for (const auto& [name, value] : k.items()) j[name] = value;
    return j;
}

GroupKey group_key_from_json(const Json& j) {
    std::vector<std::pair<std::string, std::string>> items;
    for (const auto& [name, value] : j.items()) items.push_back({name, value.get<std::string>()});
    return GroupKey(std::move(items));
}

ThresholdsArtifact make_artifact(const CalibrationResult& result, const std::string& attribute,
                                 const ThresholdGrid& grid) {
    ThresholdsArtifact a;
    a.mode = "single";
    a.constraint = result.mode;
    a.n = result.n;
    a.beta = result.beta;
    a.grid_start = grid.start;
    a.grid_stop = grid.stop;
    a.grid_step = grid.step;
    a.conforming = result.conforming;
    a.fallback_threshold = result.fallback_threshold;
    a.attributes = {attribute};
    for (const auto& [key, t] : result.assignments) a.assignments.push_back({key, t});
    return a;
}

ThresholdsArtifact make_artifact(const MultiCalibrationResult& result, const ThresholdGrid& grid) {
    ThresholdsArtifact a;
    a.mode = result.multi_mode == MultiMode::Strong ? "strong" : "weak";
    a.constraint = result.result.mode;
    a.n = result.result.n;
    a.beta = result.result.beta;
    a.grid_start = grid.start;
    a.grid_stop = grid.stop;
    a.grid_step = grid.step;
    a.conforming = result.result.conforming;
    a.fallback_threshold = result.result.fallback_threshold;
    a.attributes = result.dependence.kept;
    for (const auto& [key, t] : result.result.assignments) a.assignments.push_back({key, t});
    return a;
}

Json artifact_to_json(const ThresholdsArtifact& a) {
    Json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["mode"] = a.mode;
    j["constraint"] = mode_name(a.constraint);
    j["n"] = a.n;
    j["beta"] = a.beta;
    j["grid"] = {{"start", a.grid_start}, {"stop", a.grid_stop}, {"step", a.grid_step}};
    j["conforming"] = a.conforming;
    j["fallback_threshold"] = a.fallback_threshold;
    j["attributes"] = a.attributes;
    Json assigns = Json::array();
    for (const auto& [key, t] : a.assignments)
        assigns.push_back({{"group", group_key_to_json(key)}, {"threshold", t}});
    j["assignments"] = std::move(assigns);
    return j;
}

ThresholdsArtifact artifact_from_json(const Json& j) {
    ThresholdsArtifact a;
    a.mode = j.at("mode").get<std::string>();
    if (a.mode != "single" && a.mode != "strong" && a.mode != "weak")
        throw Error("thresholds artifact: unknown mode '" + a.mode + "'");
    a.constraint = mode_from_name(j.at("constraint").get<std::string>());
    a.n = j.at("n").get<double>();
    a.beta = j.at("beta").get<double>();
    a.grid_start = j.at("grid").at("start").get<double>();
    a.grid_stop = j.at("grid").at("stop").get<double>();
    a.grid_step = j.at("grid").at("step").get<double>();
    a.conforming = j.at("conforming").get<bool>();
    a.fallback_threshold = j.at("fallback_threshold").get<double>();
    a.attributes = j.at("attributes").get<std::vector<std::string>>();
    for (const auto& e : j.at("assignments")) {
        const double t = e.at("threshold").get<double>();
        if (!(t >= 0.0 && t <= 1.0)) throw Error("thresholds artifact: threshold out of [0,1]");
        a.assignments.push_back({group_key_from_json(e.at("group")), t});
    }
    return a;
}

Thresholds::Thresholds(ThresholdsArtifact artifact) : artifact_(std::move(artifact)) {
    is_single_ = artifact_.mode == "single";
    if (is_single_) {
        single_.mode = artifact_.constraint;
        single_.n = artifact_.n;
        single_.beta = artifact_.beta;
        single_.fallback_threshold = artifact_.fallback_threshold;
        for (const auto& [key, t] : artifact_.assignments) single_.assignments[key] = t;
    } else {
        multi_.multi_mode = artifact_.mode == "strong" ? MultiMode::Strong : MultiMode::Weak;
        multi_.result.mode = artifact_.constraint;
        multi_.result.n = artifact_.n;
        multi_.result.beta = artifact_.beta;
        multi_.result.fallback_threshold = artifact_.fallback_threshold;
        multi_.dependence.kept = artifact_.attributes;
        for (const auto& [key, t] : artifact_.assignments) multi_.result.assignments[key] = t;
    }
}

Decision Thresholds::apply(const Record& record) const {
    return is_single_ ? apply_single(single_, record) : apply_multi(multi_, record);
}

Json band_to_json(const Band& b) {
    return Json{{"mean", b.mean}, {"stddev", b.stddev}, {"n", b.n}, {"lo", b.lo}, {"hi", b.hi}};
}

Json verdict_to_json(const Verdict& v, const std::vector<GroupKey>& groups) {
    Json j;
    j["conforming"] = v.conforming;
    if (v.fpr_band) j["fpr_band"] = band_to_json(*v.fpr_band);
    if (v.tpr_band) j["tpr_band"] = band_to_json(*v.tpr_band);
    Json viol = Json::array();
    auto combined = v.combined_violations();
    for (std::size_t i = 0; i < combined.size(); ++i) {
        if (combined[i] <= 0.0) continue;
        Json e;
        if (i < groups.size()) e["group"] = group_key_to_json(groups[i]);
        e["violation"] = std::isinf(combined[i]) ? Json("inf") : Json(combined[i]);
        viol.push_back(std::move(e));
    }
    j["violations"] = std::move(viol);
    return j;
}

Json audit_outcome_to_json(const AuditOutcome& a) {
    Json j;
    j["conforming"] = a.conforming;
    Json pops = Json::array();
    std::vector<GroupKey> keys;
    for (const auto& p : a.populations) {
        keys.push_back(p.key);
        Json e;
        e["group"] = group_key_to_json(p.key);
        e["tp"] = p.cell.tp;
        e["fp"] = p.cell.fp;
        e["tn"] = p.cell.tn;
        e["fn"] = p.cell.fn;
        e["fpr"] = p.fpr ? Json(*p.fpr) : Json(nullptr);
        e["tpr"] = p.tpr ? Json(*p.tpr) : Json(nullptr);
        e["fnr"] = p.fnr ? Json(*p.fnr) : Json(nullptr);
        pops.push_back(std::move(e));
    }
    j["populations"] = std::move(pops);
    if (a.verdict) j["verdict"] = verdict_to_json(*a.verdict, keys);
    return j;
}

Json dependence_to_json(const DependenceReport& r) {
    Json j;
    j["alpha"] = r.alpha;
    Json pairs = Json::array();
    for (const auto& p : r.pairs) {
        Json e;
        e["a"] = p.a;
        e["b"] = p.b;
        if (p.testable) {
            e["chi2"] = p.chi2;
            e["dof"] = p.dof;
            e["p_value"] = p.p_value;
            e["dependent"] = p.dependent;
        } else {
            e["untestable"] = true;
        }
        pairs.push_back(std::move(e));
    }
    j["pairs"] = std::move(pairs);
    j["kept"] = r.kept;
    Json dropped = Json::array();
    for (const auto& [victim, because] : r.dropped)
        dropped.push_back({{"attribute", victim}, {"because_of", because}});
    j["dropped"] = std::move(dropped);
    return j;
}

Json degenerate_to_json(const std::vector<DegenerateGroup>& d) {
    Json arr = Json::array();
    for (const auto& g : d)
        arr.push_back({{"group", group_key_to_json(g.key)}, {"reason", g.reason}});
    return arr;
}

Json trace_summary_to_json(const CalibrationResult& r) {
    Json j;
    j["iterations"] = r.iterations;
    Json steps = Json::array();
    for (const auto& t : r.trace) {
        Json e;
        e["iteration"] = t.iteration;
        e["pruned"] = t.pruned;
        e["evicted"] = t.evicted;
        if (t.evicted) e["evicted_group"] = group_key_to_json(t.evicted_group);
        if (t.fpr_band) e["fpr_band"] = band_to_json(*t.fpr_band);
        if (t.tpr_band) e["tpr_band"] = band_to_json(*t.tpr_band);
        steps.push_back(std::move(e));
    }
    j["steps"] = std::move(steps);
    return j;
}

Json subspaces_to_json(const std::vector<FrequentItemset>& s) {
    Json arr = Json::array();
    for (const auto& f : s)
        arr.push_back({{"group", group_key_to_json(f.key)}, {"support", f.support}});
    return arr;
}

}  // namespace faircal
