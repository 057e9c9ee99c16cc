#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "faircal/core.hpp"

namespace faircal {

// Absolute slack on band endpoint comparisons, absorbing summation-order noise.
inline constexpr double kBandSlack = 1e-12;

enum class ConstraintMode { FprOnly, TprOnly, Both };

inline bool mode_needs_fpr(ConstraintMode m) { return m != ConstraintMode::TprOnly; }
inline bool mode_needs_tpr(ConstraintMode m) { return m != ConstraintMode::FprOnly; }

// Maps the constraint choice to the selection metric's beta.
inline double selection_beta(ConstraintMode m) {
    switch (m) {
        case ConstraintMode::Both: return 1.0;
        case ConstraintMode::FprOnly: return 0.5;
        case ConstraintMode::TprOnly: return 2.0;
    }
    throw Error("invalid constraint mode");
}

// [mean - n*stddev, mean + n*stddev] over K group rates. Population stddev.
struct Band {
    double mean = 0.0;
    double stddev = 0.0;
    double n = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

Band band_of(const std::vector<double>& rates, double n);

// Normalized distance outside the band, in units of stddev. 0 when inside.
// Infinity when stddev = 0 and the rate differs from the mean.
double band_violation(const Band& band, double rate);

struct Verdict {
    bool conforming = false;
    std::optional<Band> fpr_band;
    std::optional<Band> tpr_band;
    std::vector<double> fpr_violations;
    std::vector<double> tpr_violations;

    // Per group: the larger of the fpr/tpr violations that apply.
    std::vector<double> combined_violations() const;
};

Verdict conforms(const std::optional<std::vector<double>>& fpr_rates,
                 const std::optional<std::vector<double>>& tpr_rates,
                 ConstraintMode mode, double n);

}  // namespace faircal
