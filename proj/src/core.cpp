#include "faircal/core.hpp"

namespace faircal {

RateCell confusion(const std::vector<Record>& records, double threshold) {
    if (records.empty()) throw Error("empty group");
    RateCell c;
    for (const auto& r : records) {
        const int pred = classify(r, threshold);
        if (r.label == 1) {
            pred == 1 ? ++c.tp : ++c.fn;
        } else {
            pred == 1 ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

std::optional<double> try_fpr(const RateCell& c) {
    const long long d = c.fp + c.tn;
    if (d == 0) return std::nullopt;
    return static_cast<double>(c.fp) / static_cast<double>(d);
}

std::optional<double> try_tpr(const RateCell& c) {
    const long long d = c.tp + c.fn;
    if (d == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(d);
}

std::optional<double> try_fnr(const RateCell& c) {
    auto t = try_tpr(c);
    if (!t) return std::nullopt;
    return 1.0 - *t;
}

std::optional<double> try_precision(const RateCell& c) {
    const long long d = c.tp + c.fp;
    if (d == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(d);
}

double fpr(const RateCell& c) {
    auto v = try_fpr(c);
    if (!v) throw UndefinedRate("undefined rate: fp+tn = 0");
    return *v;
}

double tpr(const RateCell& c) {
    auto v = try_tpr(c);
    if (!v) throw UndefinedRate("undefined rate: tp+fn = 0");
    return *v;
}

double fnr(const RateCell& c) { return 1.0 - tpr(c); }

double precision(const RateCell& c) {
    auto v = try_precision(c);
    if (!v) throw UndefinedRate("undefined rate: tp+fp = 0");
    return *v;
}

double recall(const RateCell& c) { return tpr(c); }

double f_beta(const RateCell& c, double beta) {
    if (beta <= 0.0) throw Error("f_beta: beta must be positive");
    const double b2 = beta * beta;
    const double num = (1.0 + b2) * static_cast<double>(c.tp);
    const double den = num + b2 * static_cast<double>(c.fn) + static_cast<double>(c.fp);
    if (den == 0.0) return 0.0;
    return num / den;
}

}  // namespace faircal
