// faircal: post-hoc fairness audit and per-group threshold calibration.
//
// Exit codes: 0 success, 1 usage/format error, 2 calibration did not conform.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faircal/dataset.hpp"
#include "faircal/report.hpp"

namespace {

using namespace faircal;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConforming = 2;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content << "\n";
}

std::string dump(const Json& j) { return j.dump(2); }

// Per-population confusion under a fixed uniform threshold.
std::map<GroupKey, RateCell> rates_at_uniform(const std::vector<Record>& records,
                                              const std::string& attribute, double threshold) {
    std::map<GroupKey, RateCell> out;
    for (const auto& r : records) {
        auto v = r.attr(attribute);
        if (!v) continue;
        RateCell& c = out[GroupKey::single(attribute, *v)];
        const int pred = classify(r, threshold);
        if (r.label == 1) {
            pred == 1 ? ++c.tp : ++c.fn;
        } else {
            pred == 1 ? ++c.fp : ++c.tn;
        }
    }
    return out;
}

std::map<GroupKey, RateCell> rates_under_thresholds(const std::vector<Record>& records,
                                                    const std::string& attribute,
                                                    const Thresholds& thresholds) {
    std::map<GroupKey, RateCell> out;
    for (const auto& r : records) {
        auto v = r.attr(attribute);
        if (!v) continue;
        RateCell& c = out[GroupKey::single(attribute, *v)];
        const int pred = thresholds.apply(r).prediction;
        if (r.label == 1) {
            pred == 1 ? ++c.tp : ++c.fn;
        } else {
            pred == 1 ? ++c.fp : ++c.tn;
        }
    }
    return out;
}

Json family_json(const std::string& attribute, const std::map<GroupKey, RateCell>& pre,
                 const std::map<GroupKey, RateCell>* post, ConstraintMode mode, double n,
                 std::vector<std::string>& warnings) {
    Json fam;
    fam["attribute"] = attribute;
    if (pre.size() == 2)
        warnings.push_back("attribute '" + attribute +
                           "' has only 2 values; the n-sigma band always holds for K=2, n>=1 "
                           "and carries little statistical meaning at low arity");

    Json pops = Json::array();
    std::vector<GroupKey> keys;
    std::vector<double> pre_fpr, pre_tpr, post_fpr, post_tpr;
    bool pre_defined = true, post_defined = true;
    Json fpr_series = Json::array(), fnr_series = Json::array();
    for (const auto& [key, cell] : pre) {
        keys.push_back(key);
        Json e;
        e["group"] = group_key_to_json(key);
        auto f = try_fpr(cell), t = try_tpr(cell);
        e["pre"] = {{"tp", cell.tp},
                    {"fp", cell.fp},
                    {"tn", cell.tn},
                    {"fn", cell.fn},
                    {"fpr", f ? Json(*f) : Json(nullptr)},
                    {"tpr", t ? Json(*t) : Json(nullptr)},
                    {"fnr", t ? Json(1.0 - *t) : Json(nullptr)}};
        if (mode_needs_fpr(mode)) {
            if (f) pre_fpr.push_back(*f);
            else pre_defined = false;
        }
        if (mode_needs_tpr(mode)) {
            if (t) pre_tpr.push_back(*t);
            else pre_defined = false;
        }
        Json fpr_pt{{"population", key.to_string()}, {"pre", f ? Json(*f) : Json(nullptr)}};
        Json fnr_pt{{"population", key.to_string()},
                    {"pre", t ? Json(1.0 - *t) : Json(nullptr)}};
        if (post) {
            auto it = post->find(key);
            const RateCell pc = it == post->end() ? RateCell{} : it->second;
            auto pf = try_fpr(pc), pt = try_tpr(pc);
            e["post"] = {{"tp", pc.tp},
                         {"fp", pc.fp},
                         {"tn", pc.tn},
                         {"fn", pc.fn},
                         {"fpr", pf ? Json(*pf) : Json(nullptr)},
                         {"tpr", pt ? Json(*pt) : Json(nullptr)},
                         {"fnr", pt ? Json(1.0 - *pt) : Json(nullptr)}};
            if (mode_needs_fpr(mode)) {
                if (pf) post_fpr.push_back(*pf);
                else post_defined = false;
            }
            if (mode_needs_tpr(mode)) {
                if (pt) post_tpr.push_back(*pt);
                else post_defined = false;
            }
            fpr_pt["post"] = pf ? Json(*pf) : Json(nullptr);
            fnr_pt["post"] = pt ? Json(1.0 - *pt) : Json(nullptr);
        }
        fpr_series.push_back(std::move(fpr_pt));
        fnr_series.push_back(std::move(fnr_pt));
        pops.push_back(std::move(e));
    }
    fam["populations"] = std::move(pops);

    auto band_block = [&](const std::vector<double>& fprs, const std::vector<double>& tprs,
                          bool defined) -> Json {
        if (!defined || std::max(fprs.size(), tprs.size()) < 2) return Json(nullptr);
        Verdict v = conforms(mode_needs_fpr(mode) ? std::optional(fprs) : std::nullopt,
                             mode_needs_tpr(mode) ? std::optional(tprs) : std::nullopt, mode, n);
        return verdict_to_json(v, keys);
    };
    fam["pre_verdict"] = band_block(pre_fpr, pre_tpr, pre_defined);
    if (post) fam["post_verdict"] = band_block(post_fpr, post_tpr, post_defined);
    fam["plot"] = {{"fpr", std::move(fpr_series)}, {"fnr", std::move(fnr_series)}};
    return fam;
}

int cmd_audit(const std::string& input, const std::string& attrs_flag, double threshold,
              const std::string& thresholds_path, double n, const std::string& metric,
              const std::string& out_path) {
    const ConstraintMode mode = mode_from_name(metric);
    IngestOptions opt;
    Dataset ds = ingest_file(input, opt);
    std::vector<std::string> attrs = split_csv(attrs_flag);
    if (attrs.empty())
        for (const auto& a : ds.schema.attributes) attrs.push_back(a.name);
    if (attrs.empty()) throw Error("--attrs: no protected attributes available");

    std::optional<Thresholds> thresholds;
    if (!thresholds_path.empty()) {
        std::ifstream in(thresholds_path);
        if (!in) throw Error("cannot open '" + thresholds_path + "'");
        thresholds.emplace(artifact_from_json(Json::parse(in)));
    }

    Json rep;
    rep["tool"] = kToolName;
    rep["version"] = kToolVersion;
    rep["input"] = input;
    rep["n"] = n;
    rep["metric"] = metric;
    rep["uniform_threshold"] = threshold;
    std::vector<std::string> warnings;
    Json families = Json::array();
    for (const auto& a : attrs) {
        auto pre = rates_at_uniform(ds.records, a, threshold);
        std::optional<std::map<GroupKey, RateCell>> post;
        if (thresholds) post = rates_under_thresholds(ds.records, a, *thresholds);
        families.push_back(
            family_json(a, pre, post ? &*post : nullptr, mode, n, warnings));
    }
    rep["families"] = std::move(families);
    rep["warnings"] = warnings;
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    write_output(out_path, dump(rep));
    return kExitOk;
}

Json calibration_report(const Dataset& ds, const std::vector<std::string>& attrs,
                        const CalibrationResult& res, const AuditOutcome& audit,
                        double baseline_threshold, const DependenceReport* dep,
                        const std::vector<FrequentItemset>* subspaces) {
    Json rep;
    rep["tool"] = kToolName;
    rep["version"] = kToolVersion;
    rep["conforming"] = res.conforming;
    rep["iterations"] = res.iterations;
    rep["fallback_threshold"] = res.fallback_threshold;
    if (res.fpr_band) rep["fpr_band"] = band_to_json(*res.fpr_band);
    if (res.tpr_band) rep["tpr_band"] = band_to_json(*res.tpr_band);
    if (dep) rep["dependence"] = dependence_to_json(*dep);
    if (subspaces) rep["subspaces"] = subspaces_to_json(*subspaces);
    rep["degenerate_groups"] = degenerate_to_json(res.degenerate);
    rep["trace"] = trace_summary_to_json(res);
    rep["post_audit"] = audit_outcome_to_json(audit);

    // Plot series: pre at the baseline uniform threshold, post realized.
    std::vector<std::string> warnings;
    Json families = Json::array();
    for (const auto& a : attrs) {
        auto pre = rates_at_uniform(ds.records, a, baseline_threshold);
        std::map<GroupKey, RateCell> post;
        for (const auto& p : audit.populations)
            if (p.key.size() == 1 && p.key.items().front().first == a) post[p.key] = p.cell;
        if (post.empty()) continue;
        // Restrict pre to the audited populations.
        std::map<GroupKey, RateCell> pre_matched;
        for (const auto& [key, cell] : pre)
            if (post.count(key)) pre_matched[key] = cell;
        families.push_back(
            family_json(a, pre_matched, &post, res.mode, res.n, warnings));
    }
    rep["families"] = std::move(families);
    rep["warnings"] = warnings;
    return rep;
}

int cmd_calibrate(const std::string& input, const std::string& attr, const std::string& metric,
                  double n, double grid_start, double grid_stop, double grid_step,
                  std::size_t min_support, double baseline_threshold,
                  const std::string& out_path, const std::string& report_path) {
    const ConstraintMode mode = mode_from_name(metric);
    Dataset ds = ingest_file(input, {});
    const ThresholdGrid grid = ThresholdGrid::linear(grid_start, grid_stop, grid_step);
    CalibrationResult res = calibrate(ds.records, attr, grid, mode, n, min_support);
    AuditOutcome audit = post_audit_single(res, ds.records, n, mode);

    if (!out_path.empty())
        write_output(out_path, dump(artifact_to_json(make_artifact(res, attr, grid))));
    if (!report_path.empty())
        write_output(report_path, dump(calibration_report(ds, {attr}, res, audit,
                                                          baseline_threshold, nullptr, nullptr)));
    if (out_path.empty() && report_path.empty())
        write_output("", dump(artifact_to_json(make_artifact(res, attr, grid))));
    return res.conforming ? kExitOk : kExitNotConforming;
}

int cmd_calibrate_multi(const std::string& input, const std::string& multi_mode,
                        const std::string& attrs_flag, const std::string& metric, double n,
                        double alpha, double grid_start, double grid_stop, double grid_step,
                        std::size_t min_support, double baseline_threshold,
                        const std::string& out_path, const std::string& report_path) {
    const ConstraintMode mode = mode_from_name(metric);
    Dataset ds = ingest_file(input, {});
    std::vector<std::string> attrs = split_csv(attrs_flag);
    if (attrs.empty()) throw Error("--attrs is required");
    const ThresholdGrid grid = ThresholdGrid::linear(grid_start, grid_stop, grid_step);

    MultiCalibrationResult res;
    if (multi_mode == "strong") {
        res = calibrate_strong(ds.records, attrs, grid, mode, n, min_support, alpha);
    } else if (multi_mode == "weak") {
        res = calibrate_weak(ds.records, attrs, grid, mode, n, min_support, alpha);
    } else {
        throw Error("--mode must be strong or weak");
    }
    AuditOutcome audit = post_audit_multi(res, ds.records, n, mode);

    if (!out_path.empty())
        write_output(out_path, dump(artifact_to_json(make_artifact(res, grid))));
    if (!report_path.empty())
        write_output(report_path,
                     dump(calibration_report(ds, res.dependence.kept, res.result, audit,
                                             baseline_threshold, &res.dependence,
                                             multi_mode == "strong" ? &res.subspaces : nullptr)));
    if (out_path.empty() && report_path.empty())
        write_output("", dump(artifact_to_json(make_artifact(res, grid))));
    return res.result.conforming ? kExitOk : kExitNotConforming;
}

int cmd_apply(const std::string& input, const std::string& thresholds_path,
              const std::string& out_path) {
    Dataset ds = ingest_file(input, {});
    std::ifstream in(thresholds_path);
    if (!in) throw Error("cannot open '" + thresholds_path + "'");
    Thresholds thresholds(artifact_from_json(Json::parse(in)));

    std::vector<std::string> attr_order;
    for (const auto& a : ds.schema.attributes) attr_order.push_back(a.name);

    std::ostringstream out;
    out << "score,label";
    for (const auto& a : attr_order) out << "," << a;
    out << ",decision,threshold_used,matched_group\n";
    char buf[32];
    for (const auto& r : ds.records) {
        Decision d = thresholds.apply(r);
        std::snprintf(buf, sizeof(buf), "%.17g", r.score);
        out << buf << "," << r.label;
        for (const auto& a : attr_order) {
            auto v = r.attr(a);
            out << "," << (v ? *v : "");
        }
        std::snprintf(buf, sizeof(buf), "%.17g", d.threshold);
        out << "," << d.prediction << "," << buf << ","
            << (d.matched ? d.matched->to_string() : "<fallback>") << "\n";
    }
    std::string s = out.str();
    s.pop_back();  // write_output appends the final newline
    write_output(out_path, s);
    return kExitOk;
}

int cmd_prune_attrs(const std::string& input, const std::string& attrs_flag, double alpha,
                    const std::string& out_path) {
    Dataset ds = ingest_file(input, {});
    std::vector<std::string> attrs = split_csv(attrs_flag);
    if (attrs.empty())
        for (const auto& a : ds.schema.attributes) attrs.push_back(a.name);
    auto rep = prune_attributes(ds.records, attrs, alpha);
    write_output(out_path, dump(dependence_to_json(rep)));
    return kExitOk;
}

int cmd_mine(const std::string& input, const std::string& attrs_flag, std::size_t min_support,
             const std::string& out_path) {
    Dataset ds = ingest_file(input, {});
    std::vector<std::string> attrs = split_csv(attrs_flag);
    if (attrs.empty())
        for (const auto& a : ds.schema.attributes) attrs.push_back(a.name);
    auto mined = mine(ds.records, attrs, min_support);
    write_output(out_path, dump(subspaces_to_json(mined)));
    return kExitOk;
}

int cmd_synth(const std::string& preset, std::uint64_t seed, std::size_t groups,
              std::size_t count, double spread, const std::string& out_path) {
    std::vector<Record> records;
    std::string attribute;
    if (preset == "solvable") {
        attribute = "group";
        records = synth_solvable(groups, count, seed, attribute);
    } else if (preset == "biased") {
        attribute = "country";
        records = synth_biased(groups, count, spread, seed, attribute);
    } else {
        throw Error("--preset must be solvable or biased");
    }
    if (out_path.empty() || out_path == "-") {
        write_dataset(std::cout, records, {attribute});
    } else {
        write_dataset_file(out_path, records, {attribute});
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"post-hoc fairness audit and per-group decision threshold calibration"};
    app.require_subcommand(1);

    std::string input, attr, attrs, metric = "both", thresholds_path, out_path, report_path;
    std::string multi_mode = "weak", preset = "solvable";
    double n = 2.0, alpha = 0.01, threshold = 0.5, baseline = 0.5, spread = 0.3;
    double grid_start = 0.01, grid_stop = 0.99, grid_step = 0.01;
    std::size_t min_support = 100, groups = 6, count = 20000;
    std::uint64_t seed = 1;

    auto* a = app.add_subcommand("audit", "per-group rate audit against the n-sigma band");
    a->add_option("--input", input, "dataset file")->required();
    a->add_option("--attrs", attrs, "comma-separated protected attributes (default: all)");
    a->add_option("--threshold", threshold, "uniform decision threshold for pre rates");
    a->add_option("--thresholds", thresholds_path, "thresholds artifact for post rates");
    a->add_option("--n", n, "band width in standard deviations");
    a->add_option("--metric", metric, "fpr|tpr|both");
    a->add_option("--out", out_path, "report output path (default stdout)");

    auto* c = app.add_subcommand("calibrate", "single-attribute threshold calibration");
    c->add_option("--input", input, "dataset file")->required();
    c->add_option("--attr", attr, "protected attribute")->required();
    c->add_option("--metric", metric, "fpr|tpr|both");
    c->add_option("--n", n, "band width in standard deviations");
    c->add_option("--grid-start", grid_start, "grid start");
    c->add_option("--grid-stop", grid_stop, "grid stop");
    c->add_option("--grid-step", grid_step, "grid step");
    c->add_option("--min-support", min_support, "minimum records per group");
    c->add_option("--baseline-threshold", baseline, "uniform threshold for pre-rates in report");
    c->add_option("--out", out_path, "thresholds artifact output");
    c->add_option("--report", report_path, "audit report output");

    auto* m = app.add_subcommand("calibrate-multi", "multi-attribute calibration (strong|weak)");
    m->add_option("--input", input, "dataset file")->required();
    m->add_option("--mode", multi_mode, "strong|weak")->required();
    m->add_option("--attrs", attrs, "comma-separated protected attributes")->required();
    m->add_option("--metric", metric, "fpr|tpr|both");
    m->add_option("--n", n, "band width in standard deviations");
    m->add_option("--alpha", alpha, "chi-square dependence level");
    m->add_option("--grid-start", grid_start, "grid start");
    m->add_option("--grid-stop", grid_stop, "grid stop");
    m->add_option("--grid-step", grid_step, "grid step");
    m->add_option("--min-support", min_support, "minimum records per group/subspace");
    m->add_option("--baseline-threshold", baseline, "uniform threshold for pre-rates in report");
    m->add_option("--out", out_path, "thresholds artifact output");
    m->add_option("--report", report_path, "audit report output");

    auto* ap = app.add_subcommand("apply", "score a dataset with a thresholds artifact");
    ap->add_option("--input", input, "dataset file")->required();
    ap->add_option("--thresholds", thresholds_path, "thresholds artifact")->required();
    ap->add_option("--out", out_path, "decision file output (default stdout)");

    auto* pa = app.add_subcommand("prune-attrs", "chi-square attribute dependence pruning");
    pa->add_option("--input", input, "dataset file")->required();
    pa->add_option("--attrs", attrs, "comma-separated attributes (default: all)");
    pa->add_option("--alpha", alpha, "dependence level");
    pa->add_option("--out", out_path, "report output (default stdout)");

    auto* ms = app.add_subcommand("mine-subspaces", "frequent attribute-value conjunctions");
    ms->add_option("--input", input, "dataset file")->required();
    ms->add_option("--attrs", attrs, "comma-separated attributes (default: all)");
    ms->add_option("--min-support", min_support, "minimum records per subspace");
    ms->add_option("--out", out_path, "output (default stdout)");

    auto* sy = app.add_subcommand("synth", "deterministic synthetic dataset generator");
    sy->add_option("--preset", preset, "solvable|biased")->required();
    sy->add_option("--seed", seed, "RNG seed");
    sy->add_option("--groups", groups, "number of groups");
    sy->add_option("--records", count, "approximate record count");
    sy->add_option("--spread", spread, "planted FPR spread (biased preset)");
    sy->add_option("--out", out_path, "dataset output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (a->parsed())
            return cmd_audit(input, attrs, threshold, thresholds_path, n, metric, out_path);
        if (c->parsed())
            return cmd_calibrate(input, attr, metric, n, grid_start, grid_stop, grid_step,
                                 min_support, baseline, out_path, report_path);
        if (m->parsed())
            return cmd_calibrate_multi(input, multi_mode, attrs, metric, n, alpha, grid_start,
                                       grid_stop, grid_step, min_support, baseline, out_path,
                                       report_path);
        if (ap->parsed()) return cmd_apply(input, thresholds_path, out_path);
        if (pa->parsed()) return cmd_prune_attrs(input, attrs, alpha, out_path);
        if (ms->parsed()) return cmd_mine(input, attrs, min_support, out_path);
        if (sy->parsed()) return cmd_synth(preset, seed, groups, count, spread, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
