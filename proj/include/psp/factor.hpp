#pragma once

#include <cstdint>
#include <vector>

namespace psp::infer {

// Factor over binary variables. vars are sorted ascending; table has
// 2^|vars| entries, bit i of the row index giving vars[i]'s value.
struct Factor {
    std::vector<std::uint32_t> vars;
    std::vector<double> table;

    static Factor bernoulli(std::uint32_t var, double p_true) {
        return Factor{{var}, {1.0 - p_true, p_true}};
    }
};

Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, std::uint32_t var);

// Exact marginal Pr(query = true) by variable elimination with greedy
// min-fill ordering. Throws Error{Inference} when the induced width
// exceeds width_cap (suggesting the sampling path instead).
double eliminate_to_prob(std::vector<Factor> factors, std::uint32_t query, int width_cap = 20);

} // namespace psp::infer
