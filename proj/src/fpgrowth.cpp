#include "faircal/fpgrowth.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace faircal {

namespace {

// Items are remapped to dense ranks in global frequency order
// (support descending, tie lexicographic), so rank order == insertion order.
struct Node {
    int item = -1;
    long long count = 0;
    Node* parent = nullptr;
    std::map<int, Node*> children;
    Node* next = nullptr;  // header chain, insertion order
};

struct Tree {
    std::deque<Node> arena;
    Node* root = nullptr;
    // header[item] -> (first, last) of the node chain
    std::map<int, std::pair<Node*, Node*>> header;

    Tree() { root = &arena.emplace_back(); }

    void insert(const std::vector<int>& items, long long count) {
        Node* cur = root;
        for (int it : items) {
            auto child = cur->children.find(it);
            if (child != cur->children.end()) {
                child->second->count += count;
                cur = child->second;
            } else {
                Node* n = &arena.emplace_back();
                n->item = it;
                n->count = count;
                n->parent = cur;
                cur->children[it] = n;
                auto h = header.find(it);
                if (h == header.end()) {
                    header[it] = {n, n};
                } else {
                    h->second.second->next = n;
                    h->second.second = n;
                }
                cur = n;
            }
        }
    }
};

void grow(const Tree& tree, long long min_support, std::vector<int>& suffix,
          std::vector<std::pair<std::vector<int>, long long>>& out) {
    // Header items ascend in rank; process the least frequent (largest rank)
    // first, per the usual bottom-up recursion.
    for (auto it = tree.header.rbegin(); it != tree.header.rend(); ++it) {
        const int item = it->first;
        long long support = 0;
        for (Node* n = it->second.first; n; n = n->next) support += n->count;
        if (support < min_support) continue;

        suffix.push_back(item);
        out.push_back({suffix, support});

        // Conditional pattern base: prefix paths of every occurrence.
        Tree cond;
        for (Node* n = it->second.first; n; n = n->next) {
            std::vector<int> path;
            for (Node* p = n->parent; p && p->item >= 0; p = p->parent) path.push_back(p->item);
            std::reverse(path.begin(), path.end());
            if (!path.empty()) cond.insert(path, n->count);
        }
        if (!cond.header.empty()) grow(cond, min_support, suffix, out);
        suffix.pop_back();
    }
}

}  // namespace

std::vector<FrequentItemset> mine(const std::vector<Record>& records,
                                  const std::vector<std::string>& attributes,
                                  std::size_t min_support) {
    if (attributes.empty()) throw Error("mine: no attributes given");
    if (min_support < 1) throw Error("mine: min_support must be at least 1");

    using ItemName = std::pair<std::string, std::string>;
    std::map<ItemName, long long> support;
    std::vector<std::vector<ItemName>> transactions;
    transactions.reserve(records.size());
    for (const auto& r : records) {
        std::vector<ItemName> tx;
        for (const auto& a : attributes) {
            auto v = r.attr(a);
            if (!v) throw Error("attribute '" + a + "' missing from a record");
            tx.push_back({a, *v});
            support[tx.back()]++;
        }
        transactions.push_back(std::move(tx));
    }

    // Global order: support descending, tie lexicographic (attribute, value).
    std::vector<ItemName> frequent;
    for (const auto& [item, s] : support)
        if (s >= static_cast<long long>(min_support)) frequent.push_back(item);
    std::sort(frequent.begin(), frequent.end(), [&](const ItemName& a, const ItemName& b) {
        if (support[a] != support[b]) return support[a] > support[b];
        return a < b;
    });
    std::map<ItemName, int> rank;
    for (std::size_t i = 0; i < frequent.size(); ++i) rank[frequent[i]] = static_cast<int>(i);

    Tree tree;
    for (const auto& tx : transactions) {
        std::vector<int> items;
        for (const auto& item : tx) {
            auto it = rank.find(item);
            if (it != rank.end()) items.push_back(it->second);
        }
        std::sort(items.begin(), items.end());
        if (!items.empty()) tree.insert(items, 1);
    }

    std::vector<std::pair<std::vector<int>, long long>> raw;
    std::vector<int> suffix;
    grow(tree, static_cast<long long>(min_support), suffix, raw);

    std::vector<FrequentItemset> out;
    out.reserve(raw.size());
    for (auto& [ids, s] : raw) {
        std::vector<ItemName> items;
        for (int id : ids) items.push_back(frequent[static_cast<std::size_t>(id)]);
        out.push_back({GroupKey(std::move(items)), static_cast<std::size_t>(s)});
    }
    std::sort(out.begin(), out.end(), [](const FrequentItemset& a, const FrequentItemset& b) {
        if (a.key.size() != b.key.size()) return a.key.size() < b.key.size();
        return a.key < b.key;
    });
    return out;
}

}  // namespace faircal
