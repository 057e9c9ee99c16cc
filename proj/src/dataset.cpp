#include "faircal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace faircal {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

bool parse_score(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size() && out >= 0.0 && out <= 1.0 && std::isfinite(out);
}

std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

AttributeSchema schema_of(const std::vector<Record>& records) {
    std::map<std::string, std::set<std::string>> values;
    for (const auto& r : records)
        for (const auto& [name, value] : r.attrs) values[name].insert(value);
    AttributeSchema schema;
    for (auto& [name, vals] : values)
        schema.attributes.push_back({name, {vals.begin(), vals.end()}});
    return schema;
}

Dataset ingest(std::istream& in, const IngestOptions& options) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file");
    auto header = split(line, options.delimiter);

    long score_col = -1, label_col = -1;
    std::vector<std::pair<std::size_t, std::string>> attr_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "score") {
            score_col = static_cast<long>(i);
        } else if (header[i] == "label") {
            label_col = static_cast<long>(i);
        } else if (!header[i].empty()) {
            if (options.attributes &&
                std::find(options.attributes->begin(), options.attributes->end(), header[i]) ==
                    options.attributes->end())
                continue;
            attr_cols.push_back({i, header[i]});
        }
    }
    if (score_col < 0) throw ParseError("missing required column 'score'");
    if (label_col < 0) throw ParseError("missing required column 'label'");
    if (options.attributes) {
        for (const auto& want : *options.attributes) {
            bool found = false;
            for (const auto& [idx, name] : attr_cols) found |= (name == want);
            if (!found) throw ParseError("missing attribute column '" + want + "'");
        }
    }

    Dataset ds;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, options.delimiter);
        std::string problem;
        Record r;
        if (fields.size() < header.size()) {
            problem = "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size());
        } else if (!parse_score(fields[static_cast<std::size_t>(score_col)], r.score)) {
            problem = "bad score '" + fields[static_cast<std::size_t>(score_col)] + "'";
        } else {
            const std::string& lbl = fields[static_cast<std::size_t>(label_col)];
            if (lbl == "0") {
                r.label = 0;
            } else if (lbl == "1") {
                r.label = 1;
            } else {
                problem = "bad label '" + lbl + "'";
            }
        }
        if (!problem.empty()) {
            if (options.strict)
                throw ParseError("line " + std::to_string(line_no) + ": " + problem);
            ++ds.skipped;
            continue;
        }
        for (const auto& [idx, name] : attr_cols) r.set_attr(name, fields[idx]);
        ds.records.push_back(std::move(r));
    }
    ds.schema = schema_of(ds.records);
    return ds;
}

Dataset ingest_file(const std::string& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return ingest(in, options);
}

void write_dataset(std::ostream& out, const std::vector<Record>& records,
                   const std::vector<std::string>& attribute_order, char delimiter) {
    out << "score" << delimiter << "label";
    for (const auto& a : attribute_order) out << delimiter << a;
    out << "\n";
    for (const auto& r : records) {
        out << format_score(r.score) << delimiter << r.label;
        for (const auto& a : attribute_order) {
            auto v = r.attr(a);
            out << delimiter << (v ? *v : "");
        }
        out << "\n";
    }
}

void write_dataset_file(const std::string& path, const std::vector<Record>& records,
                        const std::vector<std::string>& attribute_order, char delimiter) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_dataset(out, records, attribute_order, delimiter);
}

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Places `count` scores between lo and hi at shape-curved quantiles.
// shape > 1 concentrates mass toward lo.
void place_scores(std::vector<double>& out, std::size_t count, double lo, double hi,
                  double shape, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < count; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        double s = lo + (hi - lo) * std::pow(u, shape);
        s += (uniform01(rng) - 0.5) * 1e-6;
        out.push_back(std::clamp(s, lo, hi));
    }
}

}  // namespace

std::vector<Record> synth(const SynthConfig& config, std::uint64_t seed) {
    if (config.groups.empty()) throw Error("synth: no groups configured");
    std::mt19937_64 rng(seed);
    std::vector<Record> records;
    for (const auto& g : config.groups) {
        if (g.count == 0) throw Error("synth: group count must be positive");
        if (!(g.positive_rate > 0.0 && g.positive_rate < 1.0))
            throw Error("synth: positive_rate must be in (0,1)");
        if (!(g.split > 0.0 && g.split < 1.0)) throw Error("synth: split must be in (0,1)");
        if (!(g.neg_above_frac >= 0.0 && g.neg_above_frac <= 1.0) ||
            !(g.pos_above_frac >= 0.0 && g.pos_above_frac <= 1.0))
            throw Error("synth: above fractions must be in [0,1]");
        const std::size_t n_pos =
            static_cast<std::size_t>(std::llround(g.positive_rate * static_cast<double>(g.count)));
        const std::size_t n_neg = g.count - n_pos;
        const std::size_t neg_above =
            static_cast<std::size_t>(std::llround(g.neg_above_frac * static_cast<double>(n_neg)));
        const std::size_t pos_above =
            static_cast<std::size_t>(std::llround(g.pos_above_frac * static_cast<double>(n_pos)));

        std::vector<double> neg_scores, pos_scores;
        // Negatives above the split thin out toward 1; below they pile near 0.
        place_scores(neg_scores, neg_above, g.split, 1.0 - 1e-4, g.neg_shape, rng);
        place_scores(neg_scores, n_neg - neg_above, 1e-4, g.split - 1e-4, 1.0 / g.neg_shape, rng);
        // Positives above the split pile toward 1.
        for (std::size_t i = 0; i < pos_above; ++i) {
            const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(pos_above);
            double s = 1.0 - (1.0 - g.split) * std::pow(u, g.pos_shape);
            s += (uniform01(rng) - 0.5) * 1e-6;
            pos_scores.push_back(std::clamp(s, g.split, 1.0 - 1e-4));
        }
        place_scores(pos_scores, n_pos - pos_above, 1e-4, g.split - 1e-4, 1.0, rng);

        for (double s : neg_scores) {
            Record r;
            r.score = s;
            r.label = 0;
            r.attrs = g.attrs;
            std::sort(r.attrs.begin(), r.attrs.end());
            records.push_back(std::move(r));
        }
        for (double s : pos_scores) {
            Record r;
            r.score = s;
            r.label = 1;
            r.attrs = g.attrs;
            std::sort(r.attrs.begin(), r.attrs.end());
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::vector<Record> synth_solvable(std::size_t k_groups, std::size_t n_records,
                                   std::uint64_t seed, const std::string& attribute) {
    if (k_groups < 2) throw Error("synth_solvable: need at least 2 groups");
    if (n_records < k_groups * 100) throw Error("synth_solvable: too few records");
    std::mt19937_64 rng(seed);

    // Base per-unit histograms over 100 bins: 80 negatives low, 20 positives high.
    constexpr int kBins = 100;
    std::vector<int> neg_base(kBins, 0), pos_base(kBins, 0);
    {
        std::vector<double> wn(kBins), wp(kBins);
        for (int b = 0; b < kBins; ++b) {
            wn[b] = std::exp(-static_cast<double>(b) / 15.0) * (0.8 + 0.4 * uniform01(rng));
            wp[b] = std::exp(-static_cast<double>(kBins - 1 - b) / 15.0) *
                    (0.8 + 0.4 * uniform01(rng));
        }
        auto apportion = [](const std::vector<double>& w, int total, std::vector<int>& out) {
            double sum = 0.0;
            for (double v : w) sum += v;
            int assigned = 0;
            std::vector<std::pair<double, int>> rema;
            for (int b = 0; b < kBins; ++b) {
                const double exact = w[static_cast<std::size_t>(b)] / sum * total;
                out[static_cast<std::size_t>(b)] = static_cast<int>(exact);
                assigned += out[static_cast<std::size_t>(b)];
                rema.push_back({exact - static_cast<int>(exact), b});
            }
            std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (int i = 0; i < total - assigned; ++i)
                out[static_cast<std::size_t>(rema[static_cast<std::size_t>(i)].second)]++;
        };
        apportion(wn, 80, neg_base);
        apportion(wp, 20, pos_base);
    }

    // Multipliers: unit is 100 records; vary group sizes around the average.
    const std::size_t total_units = n_records / 100;
    std::vector<std::size_t> mult(k_groups, total_units / k_groups);
    std::size_t spare = total_units - (total_units / k_groups) * k_groups;
    for (std::size_t g = 0; g < k_groups && spare > 0; ++g, --spare) mult[g]++;
    for (std::size_t g = 0; g + 1 < k_groups; g += 2) {
        // Shift mass between adjacent groups so sizes differ.
        const std::size_t shift = std::min(mult[g + 1] / 3, static_cast<std::size_t>(rng() % 5));
        mult[g] += shift;
        mult[g + 1] -= shift;
    }

    std::vector<Record> records;
    for (std::size_t g = 0; g < k_groups; ++g) {
        char name[32];
        std::snprintf(name, sizeof(name), "g%02zu", g);
        for (int b = 0; b < kBins; ++b) {
            const double lo = static_cast<double>(b) / kBins + 1e-4;
            const double hi = static_cast<double>(b + 1) / kBins - 1e-4;
            auto emit = [&](int per_unit, int label) {
                const std::size_t cnt = static_cast<std::size_t>(per_unit) * mult[g];
                for (std::size_t i = 0; i < cnt; ++i) {
                    Record r;
                    r.score = lo + (hi - lo) * uniform01(rng);
                    r.label = label;
                    r.set_attr(attribute, name);
                    records.push_back(std::move(r));
                }
            };
            emit(neg_base[static_cast<std::size_t>(b)], 0);
            emit(pos_base[static_cast<std::size_t>(b)], 1);
        }
    }
    return records;
}

std::vector<Record> synth_biased(std::size_t k_groups, std::size_t n_records, double spread,
                                 std::uint64_t seed, const std::string& attribute) {
    if (k_groups < 2) throw Error("synth_biased: need at least 2 groups");
    if (!(spread > 0.0 && spread < 0.6)) throw Error("synth_biased: spread must be in (0,0.6)");
    SynthConfig cfg;
    std::mt19937_64 rng(seed);
    const double base_fpr = 0.05;
    for (std::size_t g = 0; g < k_groups; ++g) {
        char name[32];
        std::snprintf(name, sizeof(name), "c%02zu", g);
        SynthGroup sg;
        sg.attrs = {{attribute, name}};
        sg.count = n_records / k_groups;
        sg.positive_rate = 0.2;
        sg.split = 0.5;
        sg.neg_above_frac =
            base_fpr + spread * static_cast<double>(g) / static_cast<double>(k_groups - 1);
        sg.pos_above_frac = 0.75 + 0.1 * uniform01(rng);
        sg.neg_shape = 1.5 + 1.5 * uniform01(rng);
        sg.pos_shape = 0.8 + 0.6 * uniform01(rng);
        cfg.groups.push_back(sg);
    }
    return synth(cfg, seed ^ 0x9e3779b97f4a7c15ULL);
}

}  // namespace faircal
