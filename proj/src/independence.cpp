#include "faircal/independence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace faircal {

namespace {

constexpr int kGammaMaxIter = 500;
constexpr double kGammaTol = 1e-12;

// Regularized lower incomplete gamma P(s,x), series expansion (x < s+1).
double gamma_p_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int k = 1; k <= kGammaMaxIter; ++k) {
        term *= x / (s + static_cast<double>(k));
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaTol)
            return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    throw Error("p-value did not converge (series); partial value " +
                std::to_string(sum * std::exp(-x + s * std::log(x) - std::lgamma(s))));
}

// Regularized upper incomplete gamma Q(s,x), Lentz continued fraction (x >= s+1).
double gamma_q_cf(double s, double x) {
    const double tiny = std::numeric_limits<double>::min() / kGammaTol;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k <= kGammaMaxIter; ++k) {
        const double an = -static_cast<double>(k) * (static_cast<double>(k) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kGammaTol)
            return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    throw Error("p-value did not converge (continued fraction); partial value " +
                std::to_string(h * std::exp(-x + s * std::log(x) - std::lgamma(s))));
}

}  // namespace

void ContingencyTable::drop_empty_lines() {
    std::vector<std::size_t> keep_rows, keep_cols;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        long long m = 0;
        for (long long v : counts[i]) m += v;
        if (m > 0) keep_rows.push_back(i);
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
        long long m = 0;
        for (const auto& row : counts) m += row[j];
        if (m > 0) keep_cols.push_back(j);
    }
    std::vector<std::string> new_rows, new_cols;
    std::vector<std::vector<long long>> new_counts;
    total = 0;
    for (std::size_t i : keep_rows) {
        new_rows.push_back(rows[i]);
        std::vector<long long> row;
        for (std::size_t j : keep_cols) {
            row.push_back(counts[i][j]);
            total += counts[i][j];
        }
        new_counts.push_back(std::move(row));
    }
    for (std::size_t j : keep_cols) new_cols.push_back(cols[j]);
    rows = std::move(new_rows);
    cols = std::move(new_cols);
    counts = std::move(new_counts);
}

ContingencyTable crosstab(const std::vector<Record>& records, const std::string& attr_a,
                          const std::string& attr_b) {
    std::set<std::string> avals, bvals;
    for (const auto& r : records) {
        auto a = r.attr(attr_a);
        auto b = r.attr(attr_b);
        if (!a) throw Error("attribute '" + attr_a + "' missing from a record");
        if (!b) throw Error("attribute '" + attr_b + "' missing from a record");
        avals.insert(*a);
        bvals.insert(*b);
    }
    ContingencyTable t;
    t.rows.assign(avals.begin(), avals.end());
    t.cols.assign(bvals.begin(), bvals.end());
    t.counts.assign(t.rows.size(), std::vector<long long>(t.cols.size(), 0));
    std::map<std::string, std::size_t> ridx, cidx;
    for (std::size_t i = 0; i < t.rows.size(); ++i) ridx[t.rows[i]] = i;
    for (std::size_t j = 0; j < t.cols.size(); ++j) cidx[t.cols[j]] = j;
    for (const auto& r : records) {
        t.counts[ridx[*r.attr(attr_a)]][cidx[*r.attr(attr_b)]]++;
        t.total++;
    }
    return t;
}

std::pair<double, int> chi_square(ContingencyTable table) {
    table.drop_empty_lines();
    const std::size_t r = table.rows.size();
    const std::size_t c = table.cols.size();
    if (r < 2 || c < 2) throw DegenerateTable("degenerate table: needs at least 2x2");
    std::vector<long long> row_marg(r, 0), col_marg(c, 0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            row_marg[i] += table.counts[i][j];
            col_marg[j] += table.counts[i][j];
        }
    const double n = static_cast<double>(table.total);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double expected =
                static_cast<double>(row_marg[i]) * static_cast<double>(col_marg[j]) / n;
            const double d = static_cast<double>(table.counts[i][j]) - expected;
            chi2 += d * d / expected;
        }
    }
    const int dof = static_cast<int>(r - 1) * static_cast<int>(c - 1);
    return {chi2, dof};
}

double chi2_p_value(double chi2, int dof) {
    if (chi2 < 0.0) throw Error("chi2_p_value: chi2 must be non-negative");
    if (dof < 1) throw Error("chi2_p_value: dof must be at least 1");
    const double s = static_cast<double>(dof) / 2.0;
    const double x = chi2 / 2.0;
    if (x == 0.0) return 1.0;
    if (x < s + 1.0) return 1.0 - gamma_p_series(s, x);
    return gamma_q_cf(s, x);
}

DependenceReport prune_attributes(const std::vector<Record>& records,
                                  const std::vector<std::string>& attributes,
                                  double alpha) {
    if (attributes.empty()) throw Error("prune_attributes: no attributes given");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("prune_attributes: alpha must be in (0,1)");

    std::map<std::string, std::size_t> arity;
    for (const auto& a : attributes) {
        std::set<std::string> vals;
        for (const auto& r : records) {
            auto v = r.attr(a);
            if (!v) throw Error("attribute '" + a + "' missing from a record");
            vals.insert(*v);
        }
        arity[a] = vals.size();
    }

    // Deterministic pair order: arity descending, then name.
    std::vector<std::string> order(attributes.begin(), attributes.end());
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        if (arity[a] != arity[b]) return arity[a] > arity[b];
        return a < b;
    });

    DependenceReport rep;
    rep.alpha = alpha;
    std::set<std::string> dropped;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (dropped.count(order[i])) continue;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (dropped.count(order[i])) break;
            if (dropped.count(order[j])) continue;
            PairTest pt;
            pt.a = order[i];
            pt.b = order[j];
            try {
                auto [chi2, dof] = chi_square(crosstab(records, pt.a, pt.b));
                pt.chi2 = chi2;
                pt.dof = dof;
                pt.p_value = chi2_p_value(chi2, dof);
                pt.dependent = pt.p_value <= alpha;
            } catch (const DegenerateTable&) {
                pt.testable = false;
            }
            if (pt.testable && pt.dependent) {
                // Keep the higher-arity attribute; on a tie drop the
                // lexicographically larger name.
                std::string victim;
                if (arity[pt.a] != arity[pt.b]) {
                    victim = arity[pt.a] < arity[pt.b] ? pt.a : pt.b;
                } else {
                    victim = std::max(pt.a, pt.b);
                }
                dropped.insert(victim);
                rep.dropped.push_back({victim, victim == pt.a ? pt.b : pt.a});
            }
            rep.pairs.push_back(std::move(pt));
        }
    }
    for (const auto& a : order)
        if (!dropped.count(a)) rep.kept.push_back(a);
    return rep;
}

}  // namespace faircal
