#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "faircal/core.hpp"

namespace faircal {

struct FrequentItemset {
    GroupKey key;
    std::size_t support = 0;

    friend bool operator==(const FrequentItemset& a, const FrequentItemset& b) {
        return a.support == b.support && a.key == b.key;
    }
};

// All attribute=value conjunctions (one value per attribute) supported by at
// least min_support records, mined with FP-growth. Output sorted by
// (itemset size, canonical key); supports are exact counts.
std::vector<FrequentItemset> mine(const std::vector<Record>& records,
                                  const std::vector<std::string>& attributes,
                                  std::size_t min_support = 100);

}  // namespace faircal
