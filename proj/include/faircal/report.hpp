#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "faircal/multi.hpp"

namespace faircal {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "faircal";
inline constexpr const char* kToolVersion = "0.1.0";

std::string mode_name(ConstraintMode m);
ConstraintMode mode_from_name(const std::string& s);

Json group_key_to_json(const GroupKey& k);
GroupKey group_key_from_json(const Json& j);

// Persisted threshold set: enough to re-run apply() without the training data.
struct ThresholdsArtifact {
    std::string mode = "single";  // single | strong | weak
    ConstraintMode constraint = ConstraintMode::Both;
    double n = 2.0;
    double beta = 1.0;
    double grid_start = 0.01;
    double grid_stop = 0.99;
    double grid_step = 0.01;
    bool conforming = false;
    double fallback_threshold = 0.0;
    std::vector<std::string> attributes;  // kept attributes (apply slots)
    std::vector<std::pair<GroupKey, double>> assignments;
};

ThresholdsArtifact make_artifact(const CalibrationResult& result, const std::string& attribute,
                                 const ThresholdGrid& grid);
ThresholdsArtifact make_artifact(const MultiCalibrationResult& result, const ThresholdGrid& grid);

Json artifact_to_json(const ThresholdsArtifact& a);
ThresholdsArtifact artifact_from_json(const Json& j);

// Inference view over a parsed artifact.
class Thresholds {
public:
    explicit Thresholds(ThresholdsArtifact artifact);
    Decision apply(const Record& record) const;
    const ThresholdsArtifact& artifact() const { return artifact_; }

private:
    ThresholdsArtifact artifact_;
    CalibrationResult single_;
    MultiCalibrationResult multi_;
    bool is_single_ = true;
};

Json band_to_json(const Band& b);
Json verdict_to_json(const Verdict& v, const std::vector<GroupKey>& groups);
Json audit_outcome_to_json(const AuditOutcome& a);
Json dependence_to_json(const DependenceReport& r);
Json degenerate_to_json(const std::vector<DegenerateGroup>& d);
Json trace_summary_to_json(const CalibrationResult& r);
Json subspaces_to_json(const std::vector<FrequentItemset>& s);

}  // namespace faircal
