#include "faircal/band.hpp"

#include <cmath>

namespace faircal {

Band band_of(const std::vector<double>& rates, double n) {
    if (rates.size() < 2) throw InsufficientGroups("insufficient groups: need at least 2 rates");
    if (n <= 0.0) throw Error("band_of: n must be positive");
    const double k = static_cast<double>(rates.size());
    double sum = 0.0;
    for (double r : rates) sum += r;
    const double mean = sum / k;
    double ss = 0.0;
    for (double r : rates) {
        const double d = r - mean;
        ss += d * d;
    }
    const double stddev = std::sqrt(ss / k);
    Band b;
    b.mean = mean;
    b.stddev = stddev;
    b.n = n;
    b.lo = mean - n * stddev;
    b.hi = mean + n * stddev;
    return b;
}

double band_violation(const Band& band, double rate) {
    if (rate >= band.lo - kBandSlack && rate <= band.hi + kBandSlack) return 0.0;
    if (band.stddev == 0.0) return std::numeric_limits<double>::infinity();
    const double above = (rate - band.hi) / band.stddev;
    const double below = (band.lo - rate) / band.stddev;
    return std::max({0.0, above, below});
}

std::vector<double> Verdict::combined_violations() const {
    std::size_t k = std::max(fpr_violations.size(), tpr_violations.size());
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < fpr_violations.size(); ++i) out[i] = std::max(out[i], fpr_violations[i]);
    for (std::size_t i = 0; i < tpr_violations.size(); ++i) out[i] = std::max(out[i], tpr_violations[i]);
    return out;
}

Verdict conforms(const std::optional<std::vector<double>>& fpr_rates,
                 const std::optional<std::vector<double>>& tpr_rates,
                 ConstraintMode mode, double n) {
    if (mode_needs_fpr(mode) && !fpr_rates) throw Error("missing rates for mode: fpr list required");
    if (mode_needs_tpr(mode) && !tpr_rates) throw Error("missing rates for mode: tpr list required");
    if (mode == ConstraintMode::Both && fpr_rates->size() != tpr_rates->size())
        throw Error("missing rates for mode: fpr/tpr length mismatch");

    Verdict v;
    v.conforming = true;
    if (mode_needs_fpr(mode)) {
        Band b = band_of(*fpr_rates, n);
        v.fpr_band = b;
        v.fpr_violations.reserve(fpr_rates->size());
        for (double r : *fpr_rates) {
            double viol = band_violation(b, r);
            if (viol > 0.0) v.conforming = false;
            v.fpr_violations.push_back(viol);
        }
    }
    if (mode_needs_tpr(mode)) {
        Band b = band_of(*tpr_rates, n);
        v.tpr_band = b;
        v.tpr_violations.reserve(tpr_rates->size());
        for (double r : *tpr_rates) {
            double viol = band_violation(b, r);
            if (viol > 0.0) v.conforming = false;
            v.tpr_violations.push_back(viol);
        }
    }
    return v;
}

}  // namespace faircal
