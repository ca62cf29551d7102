#include "psp/factor.hpp"

#include "psp/error.hpp"

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <vector>

namespace psp::infer {

Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    out.vars.reserve(a.vars.size() + b.vars.size());
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                   std::back_inserter(out.vars));
    std::size_t n = out.vars.size();
    out.table.assign(std::size_t{1} << n, 0.0);

    // bit position of each output var in a and b
    std::vector<int> pos_a(n, -1), pos_b(n, -1);
    for (std::size_t i = 0; i < n; i++) {
        auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), out.vars[i]);
        if (ia != a.vars.end() && *ia == out.vars[i]) pos_a[i] = static_cast<int>(ia - a.vars.begin());
        auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), out.vars[i]);
        if (ib != b.vars.end() && *ib == out.vars[i]) pos_b[i] = static_cast<int>(ib - b.vars.begin());
    }
    for (std::size_t row = 0; row < out.table.size(); row++) {
        std::size_t ra = 0, rb = 0;
        for (std::size_t i = 0; i < n; i++) {
            std::size_t bit = (row >> i) & 1;
            if (pos_a[i] >= 0) ra |= bit << pos_a[i];
            if (pos_b[i] >= 0) rb |= bit << pos_b[i];
        }
        out.table[row] = a.table[ra] * b.table[rb];
    }
    return out;
}

Factor sum_out(const Factor& f, std::uint32_t var) {
    auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
    if (it == f.vars.end() || *it != var) return f;
    std::size_t k = static_cast<std::size_t>(it - f.vars.begin());
    Factor out;
    out.vars.reserve(f.vars.size() - 1);
    for (std::size_t i = 0; i < f.vars.size(); i++) {
        if (i != k) out.vars.push_back(f.vars[i]);
    }
    out.table.assign(std::size_t{1} << out.vars.size(), 0.0);
    std::size_t low_mask = (std::size_t{1} << k) - 1;
    for (std::size_t row = 0; row < out.table.size(); row++) {
        std::size_t base = (row & low_mask) | ((row & ~low_mask) << 1);
        out.table[row] = f.table[base] + f.table[base | (std::size_t{1} << k)];
    }
    return out;
}

namespace {

// sorted-vector adjacency helpers
void insert_sorted(std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
}

void erase_sorted(std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
}

bool contains_sorted(const std::vector<int>& v, int x) {
    return std::binary_search(v.begin(), v.end(), x);
}

} // namespace

double eliminate_to_prob(std::vector<Factor> factors, std::uint32_t query, int width_cap) {
    // dense variable ids
    std::vector<std::uint32_t> ids;
    for (const Factor& f : factors) ids.insert(ids.end(), f.vars.begin(), f.vars.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto dense = [&](std::uint32_t v) {
        return static_cast<int>(std::lower_bound(ids.begin(), ids.end(), v) - ids.begin());
    };
    if (!std::binary_search(ids.begin(), ids.end(), query)) {
        fail(Error::Kind::Inference, "query variable appears in no factor");
    }
    int var_count = static_cast<int>(ids.size());
    int query_id = dense(query);

    std::vector<std::vector<int>> adj(static_cast<std::size_t>(var_count));
    std::vector<std::vector<int>> factors_of(static_cast<std::size_t>(var_count));
    std::vector<bool> consumed(factors.size(), false);
    for (std::size_t fi = 0; fi < factors.size(); fi++) {
        const Factor& f = factors[fi];
        for (std::uint32_t v : f.vars) {
            factors_of[static_cast<std::size_t>(dense(v))].push_back(static_cast<int>(fi));
            for (std::uint32_t w : f.vars) {
                if (v != w) insert_sorted(adj[static_cast<std::size_t>(dense(v))], dense(w));
            }
        }
    }

    auto fill_cost = [&](int v) -> long long {
        const std::vector<int>& nb = adj[static_cast<std::size_t>(v)];
        long long fill = 0;
        for (std::size_t i = 0; i < nb.size(); i++) {
            for (std::size_t j = i + 1; j < nb.size(); j++) {
                if (!contains_sorted(adj[static_cast<std::size_t>(nb[i])], nb[j])) fill++;
            }
        }
        return fill * 1000 + static_cast<long long>(nb.size());
    };

    // lazy min-heap: entries go stale when a neighborhood changes
    std::vector<std::uint32_t> version(static_cast<std::size_t>(var_count), 0);
    struct Entry {
        long long cost;
        int var;
        std::uint32_t version;
        bool operator>(const Entry& o) const { return cost > o.cost; }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    std::vector<bool> eliminated(static_cast<std::size_t>(var_count), false);
    for (int v = 0; v < var_count; v++) {
        if (v != query_id) heap.push({fill_cost(v), v, 0});
    }

    int remaining = var_count - 1;
    while (remaining > 0) {
        Entry top = heap.top();
        heap.pop();
        int v = top.var;
        if (eliminated[static_cast<std::size_t>(v)]) continue;
        if (top.version != version[static_cast<std::size_t>(v)]) {
            heap.push({fill_cost(v), v, version[static_cast<std::size_t>(v)]});
            continue;
        }

        // multiply every live factor touching v, then sum v out
        Factor product;
        bool have = false;
        for (int fi : factors_of[static_cast<std::size_t>(v)]) {
            if (consumed[static_cast<std::size_t>(fi)]) continue;
            consumed[static_cast<std::size_t>(fi)] = true;
            product = have ? multiply(product, factors[static_cast<std::size_t>(fi)])
                           : std::move(factors[static_cast<std::size_t>(fi)]);
            have = true;
            if (static_cast<int>(product.vars.size()) - 1 > width_cap) {
                fail(Error::Kind::Inference,
                     "induced width " + std::to_string(product.vars.size() - 1) +
                         " exceeds the cap (" + std::to_string(width_cap) +
                         "); use the sampling path for this query");
            }
        }
        if (have) {
            Factor reduced = sum_out(product, ids[static_cast<std::size_t>(v)]);
            int slot = static_cast<int>(factors.size());
            for (std::uint32_t w : reduced.vars) {
                factors_of[static_cast<std::size_t>(dense(w))].push_back(slot);
            }
            factors.push_back(std::move(reduced));
            consumed.push_back(false);
        }

        eliminated[static_cast<std::size_t>(v)] = true;
        std::vector<int> nb = adj[static_cast<std::size_t>(v)];
        for (int i : nb) {
            erase_sorted(adj[static_cast<std::size_t>(i)], v);
        }
        for (std::size_t i = 0; i < nb.size(); i++) {
            for (std::size_t j = i + 1; j < nb.size(); j++) {
                insert_sorted(adj[static_cast<std::size_t>(nb[i])], nb[j]);
                insert_sorted(adj[static_cast<std::size_t>(nb[j])], nb[i]);
            }
        }
        for (int i : nb) {
            if (!eliminated[static_cast<std::size_t>(i)] && i != query_id) {
                version[static_cast<std::size_t>(i)]++;
                heap.push({fill_cost(i), i, version[static_cast<std::size_t>(i)]});
            }
        }
        adj[static_cast<std::size_t>(v)].clear();
        remaining--;
    }

    Factor result{{}, {1.0}};
    for (std::size_t fi = 0; fi < factors.size(); fi++) {
        if (!consumed[fi]) result = multiply(result, factors[fi]);
    }
    if (result.vars.empty()) {
        fail(Error::Kind::Inference, "query variable appears in no factor");
    }
    double f0 = result.table[0];
    double f1 = result.table[1];
    double z = f0 + f1;
    if (z <= 0.0) {
        fail(Error::Kind::Inference, "inference normalizer vanished");
    }
    return f1 / z;
}

} // namespace psp::infer
