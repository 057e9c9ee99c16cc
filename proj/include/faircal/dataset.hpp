#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "faircal/core.hpp"

namespace faircal {

struct ParseError : Error {
    using Error::Error;
};

struct IngestOptions {
    char delimiter = ',';
    bool strict = true;  // lenient mode skips bad rows and counts them
    std::optional<std::vector<std::string>> attributes;  // restrict to these columns
};

struct Dataset {
    std::vector<Record> records;
    AttributeSchema schema;
    std::size_t skipped = 0;
};

Dataset ingest(std::istream& in, const IngestOptions& options = {});
Dataset ingest_file(const std::string& path, const IngestOptions& options = {});

void write_dataset(std::ostream& out, const std::vector<Record>& records,
                   const std::vector<std::string>& attribute_order, char delimiter = ',');
void write_dataset_file(const std::string& path, const std::vector<Record>& records,
                        const std::vector<std::string>& attribute_order, char delimiter = ',');

// One synthetic group: scores are placed deterministically around `split`
// with exact above/below counts and shape-controlled quantile curves.
struct SynthGroup {
    std::vector<std::pair<std::string, std::string>> attrs;
    std::size_t count = 0;
    double positive_rate = 0.2;
    double split = 0.5;
    double neg_above_frac = 0.1;  // FPR planted at `split`
    double pos_above_frac = 0.8;  // TPR planted at `split`
    double neg_shape = 2.0;
    double pos_shape = 1.0;
};

struct SynthConfig {
    std::vector<SynthGroup> groups;
};

std::vector<Record> synth(const SynthConfig& config, std::uint64_t seed);

// All groups share identical per-class score histograms over 0.01-wide bins,
// so every default-grid threshold yields identical FPR/TPR across groups.
std::vector<Record> synth_solvable(std::size_t k_groups, std::size_t n_records,
                                   std::uint64_t seed, const std::string& attribute = "group");

// Groups with planted FPR spread (max - min) at threshold `split` = 0.5.
std::vector<Record> synth_biased(std::size_t k_groups, std::size_t n_records, double spread,
                                 std::uint64_t seed, const std::string& attribute = "country");

AttributeSchema schema_of(const std::vector<Record>& records);

}  // namespace faircal
