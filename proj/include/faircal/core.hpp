#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace faircal {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndefinedRate : Error {
    using Error::Error;
};

struct InsufficientGroups : Error {
    using Error::Error;
};

// One scored prediction. label: 0 = genuine, 1 = positive.
// attrs holds (attribute name, value) pairs kept sorted by name.
struct Record {
    double score = 0.0;
    int label = 0;
    std::vector<std::pair<std::string, std::string>> attrs;

    std::optional<std::string> attr(const std::string& name) const {
        auto it = std::lower_bound(attrs.begin(), attrs.end(), name,
                                   [](const auto& a, const std::string& n) { return a.first < n; });
        if (it != attrs.end() && it->first == name) return it->second;
        return std::nullopt;
    }

    void set_attr(std::string name, std::string value) {
        auto it = std::lower_bound(attrs.begin(), attrs.end(), name,
                                   [](const auto& a, const std::string& n) { return a.first < n; });
        if (it != attrs.end() && it->first == name) {
            it->second = std::move(value);
        } else {
            attrs.insert(it, {std::move(name), std::move(value)});
        }
    }
};

struct AttributeInfo {
    std::string name;
    std::vector<std::string> values;  // sorted, distinct
    std::size_t arity() const { return values.size(); }
};

struct AttributeSchema {
    std::vector<AttributeInfo> attributes;

    const AttributeInfo* find(const std::string& name) const {
        for (const auto& a : attributes)
            if (a.name == name) return &a;
        return nullptr;
    }
};

// A conjunction of attribute=value conditions identifying a (sub)population.
// Items are kept sorted by (name, value); at most one item per attribute.
class GroupKey {
public:
    GroupKey() = default;

    explicit GroupKey(std::vector<std::pair<std::string, std::string>> items)
        : items_(std::move(items)) {
        std::sort(items_.begin(), items_.end());
        for (std::size_t i = 1; i < items_.size(); ++i) {
            if (items_[i].first == items_[i - 1].first)
                throw Error("GroupKey: duplicate attribute '" + items_[i].first + "'");
        }
        if (items_.empty()) throw Error("GroupKey: empty item set");
    }

    static GroupKey single(std::string attr, std::string value) {
        return GroupKey({{std::move(attr), std::move(value)}});
    }

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

    bool matches(const Record& r) const {
        for (const auto& [name, value] : items_) {
            auto v = r.attr(name);
            if (!v || *v != value) return false;
        }
        return true;
    }

    std::string to_string() const {
        std::string s;
        for (const auto& [name, value] : items_) {
            if (!s.empty()) s += ",";
            s += name + "=" + value;
        }
        return s;
    }

    friend bool operator==(const GroupKey& a, const GroupKey& b) { return a.items_ == b.items_; }
    friend bool operator!=(const GroupKey& a, const GroupKey& b) { return !(a == b); }
    friend bool operator<(const GroupKey& a, const GroupKey& b) { return a.items_ < b.items_; }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

// Confusion counts. Rates are derived on demand from exact integers.
struct RateCell {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }

    RateCell& operator+=(const RateCell& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

inline int classify(const Record& r, double threshold) {
    return r.score >= threshold ? 1 : 0;
}

RateCell confusion(const std::vector<Record>& records, double threshold);

std::optional<double> try_fpr(const RateCell& c);
std::optional<double> try_tpr(const RateCell& c);
std::optional<double> try_fnr(const RateCell& c);
std::optional<double> try_precision(const RateCell& c);

double fpr(const RateCell& c);
double tpr(const RateCell& c);
double fnr(const RateCell& c);
double precision(const RateCell& c);
double recall(const RateCell& c);

// F-beta from raw counts: (1+b^2)tp / ((1+b^2)tp + b^2 fn + fp).
// Total: returns 0 when the formula degenerates (tp = 0 with fp + fn possibly 0).
double f_beta(const RateCell& c, double beta);

}  // namespace faircal
