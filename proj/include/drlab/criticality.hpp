#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "drlab/law.hpp"
#include "drlab/numerics.hpp"
#include "drlab/pmf.hpp"
#include "drlab/trajectory.hpp"

namespace drlab {

struct CriticalPoint {
    double p_c = 0.0;
    bool boundary = false;  // Delta < 0 on the whole of [0,1); p_c clamped to 1
};

// Locates the zero of p -> Delta(realized law) by bisection. Delta is
// affine in p for these mixture families, but bisection keeps one code
// path for anything monotone and is testable against the closed forms.
inline CriticalPoint find_pc(const InitialLaw& family, double delta_tol = 1e-12) {
    if (family.kind == InitialLaw::Kind::HeavyTailBeta)
        throw std::domain_error(
            "find_pc: heavy-tail-beta has p_c = 0; <X0 2^X0> diverges for every p > 0, so the "
            "critical manifold is never crossed at positive p");
    auto delta_at = [&](double p) {
        return delta_value(pmf_from_law(family.with_p(p), std::numeric_limits<std::int64_t>::max() / 2,
                                        /*allow_degenerate=*/true));
    };
    double lo = 0.0, hi = 1.0;
    double dlo = delta_at(lo), dhi = delta_at(hi);
    if (dlo > 0.0) return {0.0, false};
    if (dhi <= 0.0) return {1.0, true};  // Delta < 0 on all of [0,1): boundary case
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = delta_at(mid);
        if (std::abs(dm) < delta_tol && hi - lo < 1e-14) return {mid, false};
        if (dm < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi == lo || std::nextafter(lo, hi) == hi) break;
    }
    return {0.5 * (lo + hi), false};
}

struct FreeEnergyEstimate {
    double lower = 0.0;           // certified: truncated chain is stochastically smaller
    double upper = 0.0;           // certified: mean-loss ledger folded back in
    std::int64_t n_lower = 0;
    std::int64_t n_upper = 0;
    bool width_warning = false;   // requested relative width not reached by n_max

    double width() const { return upper - lower; }
};

namespace detail {

// Plain-probability evolution used for free-energy runs. The tilted array
// overflows once <2^{X_n}> explodes in the supercritical phase; means never
// do. The block starts at index `base` (no mass below it), which keeps
// near-deterministic laws -- whose minimum walks off like m^n -- cheap.
// Truncation deposits tail mass at the lowest atom and tracks the removed
// mean, so the bracket stays certified:
//   lower_n = (m_n - 1/(m-1)) / m^n   (monotone increasing to F_inf on
//                                      exact runs, only smaller when cut)
//   upper_n = m_n / m^n + sum_j delta_j m^{-j}
// with delta_j the mean removed at step j (the one-step map is m-Lipschitz
// in the means under the monotone coupling).
struct PlainPmf {
    std::int64_t base = 0;   // absolute index of p[0]
    std::vector<double> p;

    double mean() const {
        CompensatedSum s;
        for (std::size_t i = 0; i < p.size(); ++i)
            s.add(static_cast<double>(base + static_cast<std::int64_t>(i)) * p[i]);
        return s.value();
    }

    std::int64_t max_index() const { return base + static_cast<std::int64_t>(p.size()) - 1; }

    void compact() {
        std::size_t lead = 0;
        while (lead + 1 < p.size() && p[lead] == 0.0) ++lead;
        if (lead > 0) {
            p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(lead));
            base += static_cast<std::int64_t>(lead);
        }
        while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    }

    // Moves atoms above max_idx down to the lowest stored atom (still a
    // stochastically smaller law); returns the mean removed.
    double truncate_floor(std::int64_t max_idx) {
        if (max_index() <= max_idx) return 0.0;
        const std::size_t keep =
            max_idx >= base ? static_cast<std::size_t>(max_idx - base) + 1 : 1;
        CompensatedSum mass, removed;
        for (std::size_t i = keep; i < p.size(); ++i) {
            mass.add(p[i]);
            removed.add(static_cast<double>(i) * p[i]);  // drop from base+i to base
        }
        p.resize(keep);
        p[0] += mass.value();
        return removed.value();
    }

    void step(int m) {
        std::vector<double> c;
        const std::size_t out_len = static_cast<std::size_t>(m) * (p.size() - 1) + 1;
        if (out_len <= kConvFftThreshold) {
            c = p;
            for (int i = 1; i < m; ++i) c = conv_quadratic(c, p);
        } else {
            c = conv_fft_power(p, m);
        }
        const std::int64_t conv_base = static_cast<std::int64_t>(m) * base;
        if (conv_base >= 2) {
            base = conv_base - 1;
            p = std::move(c);
        } else {
            // conv_base == 0: the sum's mass at 0 and 1 folds onto 0
            std::vector<double> next(c.size() > 1 ? c.size() - 1 : 1, 0.0);
            next[0] = c[0] + (c.size() > 1 ? c[1] : 0.0);
            for (std::size_t j = 1; j + 1 < c.size(); ++j) next[j] = c[j + 1];
            base = 0;
            p = std::move(next);
        }
        compact();
        // squash the exponentially unstable total-mass mode (see
        // TiltedPmf::normalize)
        CompensatedSum mass;
        for (double v : p) mass.add(v);
        const double total = mass.value();
        if (total != 1.0 && total > 0.0)
            for (double& v : p) v /= total;
    }
};

}  // namespace detail

// Certified bracket for F_inf = lim <X_n> / m^n. Truncation follows the
// running mean (tails here decay at least geometrically), so supercritical
// runs stay cheap no matter how small F_inf is.
inline FreeEnergyEstimate free_energy(const TiltedPmf& pmf0, std::int64_t n_max,
                                      const TruncationPolicy& trunc = TruncationPolicy{},
                                      double rel_tol = 0.1, int m = 2) {
    if (n_max < 1) throw std::invalid_argument("free_energy: n_max must be >= 1");
    detail::PlainPmf cur;
    cur.p.resize(pmf0.q.size(), 0.0);
    for (std::size_t k = 0; k < pmf0.q.size(); ++k)
        cur.p[k] = std::ldexp(pmf0.q[k], -static_cast<int>(k));
    if (cur.p.empty()) cur.p.push_back(0.0);
    cur.p[0] += pmf0.lost_mass;
    cur.compact();

    // (mu_n - c) / m^n with c = 1/(m-1) is non-decreasing along the exact
    // chain and shares the limit F_inf; truncation only ever lowers it.
    const double shift = 1.0 / static_cast<double>(m - 1);

    FreeEnergyEstimate est;
    est.lower = std::max(0.0, cur.mean() - shift);
    est.upper = cur.mean();
    est.n_lower = 0;
    est.n_upper = 0;

    double ledger = 0.0;       // sum_j delta_j m^{-j}
    double scale = 1.0;        // m^{-n}
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::int64_t n = 1; n <= n_max; ++n) {
        cur.step(m);
        scale *= inv_m;
        // follow-the-mean cap; retry wider if the step loses relative mass
        const double mean_before = cur.mean();
        std::int64_t cap = std::max(trunc.cap_floor,
                                    static_cast<std::int64_t>(8.0 * mean_before) + 256);
        cap = std::min(cap, trunc.hard_cap);
        double removed = 0.0;
        for (;;) {
            detail::PlainPmf probe = cur;
            removed = probe.truncate_floor(cap);
            if (!trunc.adaptive || cap >= trunc.hard_cap ||
                removed <= 1e-12 * std::max(mean_before, 1e-3)) {
                cur = std::move(probe);
                break;
            }
            cap = std::min(cap * 2, trunc.hard_cap);
        }
        ledger += removed * scale;
        const double mean_n = cur.mean();
        const double lower_n = std::max(0.0, (mean_n - shift) * scale);
        const double upper_n = mean_n * scale + ledger;
        if (lower_n > est.lower) {
            est.lower = lower_n;
            est.n_lower = n;
        }
        if (upper_n < est.upper) {
            est.upper = upper_n;
            est.n_upper = n;
        }
        if (est.lower > 0.0 && est.upper - est.lower <= rel_tol * est.lower) return est;
    }
    est.width_warning = est.upper > 1e-30;
    return est;
}

struct ScanRow {
    double p = 0.0;
    double delta = 0.0;
    FreeEnergyEstimate fe;
    std::string flags;  // comma-separated: "wide", "not-supercritical"
};

// Free-energy scan over a p-grid; rows above their requested tolerance are
// flagged, never dropped.
inline std::vector<ScanRow> scan_free_energy(const InitialLaw& family,
                                             const std::vector<double>& p_values,
                                             std::int64_t n_max,
                                             const TruncationPolicy& trunc = TruncationPolicy{},
                                             double rel_tol = 0.1) {
    std::vector<ScanRow> rows;
    rows.reserve(p_values.size());
    for (double p : p_values) {
        ScanRow row;
        row.p = p;
        const TiltedPmf pmf = pmf_from_law(family.with_p(p),
                                           std::numeric_limits<std::int64_t>::max() / 2,
                                           /*allow_degenerate=*/true);
        row.delta = delta_value(pmf);
        row.fe = free_energy(pmf, n_max, trunc, rel_tol);
        if (row.delta <= 0.0) row.flags = "not-supercritical";
        if (row.fe.width_warning) row.flags += row.flags.empty() ? "wide" : ",wide";
        rows.push_back(std::move(row));
    }
    return rows;
}

enum class FitModel { LogLog, LogLogLog };

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

// Ordinary least squares on the transformed coordinates:
//   LogLog     (ln x, ln y)
//   LogLogLog  (ln x, ln ln(1/y))  -- y must lie in (0,1)
inline FitResult exponent_fit(const std::vector<std::pair<double, double>>& points,
                              FitModel model) {
    if (points.size() < 3) throw std::invalid_argument("exponent_fit: need at least 3 points");
    std::vector<double> xs, ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("exponent_fit: inputs must be positive");
        if (model == FitModel::LogLog) {
            xs.push_back(std::log(x));
            ys.push_back(std::log(y));
        } else {
            if (!(y < 1.0))
                throw std::invalid_argument("exponent_fit: log-log-log model needs y in (0,1)");
            xs.push_back(std::log(x));
            ys.push_back(std::log(std::log(1.0 / y)));
        }
    }
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("exponent_fit: degenerate abscissae");
    FitResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - (r.intercept + r.slope * xs[i]);
        ss_res += e * e;
    }
    if (n > 2) r.stderr_slope = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
    return r;
}

}  // namespace drlab
