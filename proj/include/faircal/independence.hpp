#pragma once

#include <string>
#include <utility>
#include <vector>

#include "faircal/core.hpp"

namespace faircal {

struct DegenerateTable : Error {
    using Error::Error;
};

struct ContingencyTable {
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    std::vector<std::vector<long long>> counts;  // [row][col]
    long long total = 0;

    // Drops all-zero rows and columns; recomputes total.
    void drop_empty_lines();
};

ContingencyTable crosstab(const std::vector<Record>& records, const std::string& attr_a,
                          const std::string& attr_b);

// Pearson chi-square statistic and degrees of freedom (r-1)(c-1).
// Empty rows/columns are removed first; throws DegenerateTable below 2x2.
std::pair<double, int> chi_square(ContingencyTable table);

// Upper-tail chi-square probability Q(dof/2, chi2/2) via the regularized
// incomplete gamma function (series below s+1, continued fraction above).
double chi2_p_value(double chi2, int dof);

struct PairTest {
    std::string a;
    std::string b;
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;
    bool dependent = false;
    bool testable = true;
};

struct DependenceReport {
    double alpha = 0.01;
    std::vector<PairTest> pairs;
    std::vector<std::string> kept;
    std::vector<std::pair<std::string, std::string>> dropped;  // (dropped, because-of)
};

// Tests attribute pairs in deterministic order (arity descending, then name)
// and drops the lower-arity member of each dependent pair.
DependenceReport prune_attributes(const std::vector<Record>& records,
                                  const std::vector<std::string>& attributes,
                                  double alpha = 0.01);

}  // namespace faircal
