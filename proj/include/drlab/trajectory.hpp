#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "drlab/pmf.hpp"

namespace drlab {

// Floor-truncation schedule. The support cap for the pmf produced at
// generation n is min(hard_cap, max(cap_floor, cap_per_n * n) << doublings);
// the doubling counter is bumped whenever a step removes more tilted mass
// than adapt_threshold, and the step is redone at the wider cap.
struct TruncationPolicy {
    std::int64_t cap_floor = 64;
    double cap_per_n = 8.0;
    double adapt_threshold = 1e-14;
    std::int64_t hard_cap = std::int64_t(1) << 22;
    bool adaptive = true;
    double hard_loss_cap = 1e-3;  // trajectory aborts beyond this cumulative tilted loss

    std::int64_t cap(std::int64_t generation, int doublings = 0) const {
        double base = std::max(static_cast<double>(cap_floor),
                               cap_per_n * static_cast<double>(generation));
        base = std::ldexp(base, doublings);
        const double capped = std::min(base, static_cast<double>(hard_cap));
        return static_cast<std::int64_t>(capped);
    }

    static TruncationPolicy untruncated() {
        TruncationPolicy t;
        t.cap_floor = t.hard_cap = std::int64_t(1) << 30;
        t.adaptive = false;
        return t;
    }
};

// Policy-driven step for the pmf of generation `generation`; retries at
// doubled caps until the per-step tilted loss respects the policy.
inline TiltedPmf evolve_step(const TiltedPmf& pmf, int m, const TruncationPolicy& trunc,
                             std::int64_t generation = 1, int* doublings = nullptr,
                             ConvMethod method = ConvMethod::Auto) {
    int local = doublings ? *doublings : 0;
    for (;;) {
        const std::int64_t cap = trunc.cap(generation, local);
        TiltedPmf next = evolve_step(pmf, m, cap, method);
        const double step_loss = next.lost_tilted_mass - m * pmf.lost_tilted_mass;
        if (!trunc.adaptive || step_loss <= trunc.adapt_threshold || cap >= trunc.hard_cap) {
            if (doublings) *doublings = local;
            return next;
        }
        ++local;
    }
}

struct TrajectorySummary {
    std::int64_t generation = 0;
    double survival = 0.0;                // P(X_n > 0)
    double mean = 0.0;                    // <X_n>
    double h2 = 0.0;                      // <2^{X_n}>
    double h2_product = 1.0;              // prod_{i<n} <2^{X_i}>
    double delta = 0.0;                   // 2 H_n'(2) - H_n(2)
    std::vector<double> tilted_moments;   // <X_n^q 2^{X_n}> for configured q
    std::vector<double> conditional_pmf;  // P(X_n = k | X_n > 0), k = 1..cap
};

inline TrajectorySummary summarize(const TiltedPmf& pmf, std::int64_t generation,
                                   double h2_product, const std::vector<int>& q_list,
                                   std::int64_t conditional_cap = 32) {
    TrajectorySummary s;
    s.generation = generation;
    s.survival = pmf.survival();
    s.mean = pmf.mean();
    s.h2 = pmf.h2();
    s.h2_product = h2_product;
    s.delta = delta(pmf).value;
    s.tilted_moments.reserve(q_list.size());
    for (int q : q_list) s.tilted_moments.push_back(tilted_moment(pmf, q));
    if (conditional_cap > 0 && s.survival > 0.0) {
        s.conditional_pmf.reserve(static_cast<std::size_t>(conditional_cap));
        for (std::int64_t k = 1; k <= conditional_cap; ++k)
            s.conditional_pmf.push_back(pmf.p(k) / s.survival);
    }
    return s;
}

// Exact distribution evolution, one summary per generation 0..n_max.
// With floor truncation every reported survival and mean is a lower bound
// of the untruncated value.
inline std::vector<TrajectorySummary> evolve_trajectory(
    const TiltedPmf& pmf0, std::int64_t n_max, int m = 2,
    TruncationPolicy trunc = TruncationPolicy{}, const std::vector<int>& q_list = {},
    std::int64_t conditional_cap = 32, ConvMethod method = ConvMethod::Auto) {
    if (n_max < 1) throw std::invalid_argument("evolve_trajectory: n_max must be >= 1");
    std::vector<TrajectorySummary> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    TiltedPmf cur = pmf0;
    double h2_product = 1.0;
    int doublings = 0;
    out.push_back(summarize(cur, 0, h2_product, q_list, conditional_cap));
    for (std::int64_t n = 1; n <= n_max; ++n) {
        h2_product *= out.back().h2;
        cur = evolve_step(cur, m, trunc, n, &doublings, method);
        if (cur.lost_tilted_mass > trunc.hard_loss_cap)
            throw std::runtime_error(
                "evolve_trajectory: cumulative tilted truncation loss " +
                std::to_string(cur.lost_tilted_mass) + " exceeds the policy hard cap at n = " +
                std::to_string(n) + "; widen the truncation policy");
        out.push_back(summarize(cur, n, h2_product, q_list, conditional_cap));
    }
    return out;
}

// The evolved pmf itself at generation n (profile comparisons need it).
inline TiltedPmf evolve_to(const TiltedPmf& pmf0, std::int64_t n, int m = 2,
                           TruncationPolicy trunc = TruncationPolicy{},
                           ConvMethod method = ConvMethod::Auto) {
    TiltedPmf cur = pmf0;
    int doublings = 0;
    for (std::int64_t i = 1; i <= n; ++i) cur = evolve_step(cur, m, trunc, i, &doublings, method);
    return cur;
}

}  // namespace drlab
