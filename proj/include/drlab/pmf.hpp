#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "drlab/numerics.hpp"

namespace drlab {

// Integer-supported law stored through its tilted weights q[k] = 2^k P(X=k).
//
// Floor truncation folds tail probability onto the zero atom (the mass
// keeps circulating there; the resulting law is stochastically smaller, so
// every downstream survival / mean / free-energy figure is a certified
// lower bound of the untruncated value). The ledgers are diagnostic
// records of that damage, cumulative along a chain:
//   lost_mass         total plain probability relocated to 0
//   lost_tilted_mass  total 2^k P(X=k) taken off the tail atoms
//
// The tilted array is the numerically stable representation here: on the
// critical manifold q[k] stays uniformly O(n^-2) while the raw P(X=k) span
// hundreds of orders of magnitude.
struct TiltedPmf {
    std::vector<double> q;           // q[k], k = 0..k_max()
    double lost_mass = 0.0;
    double lost_tilted_mass = 0.0;

    std::int64_t k_max() const noexcept { return static_cast<std::int64_t>(q.size()) - 1; }

    double p(std::int64_t k) const noexcept {
        if (k < 0 || k >= static_cast<std::int64_t>(q.size())) return 0.0;
        return std::ldexp(q[static_cast<std::size_t>(k)], static_cast<int>(-k));
    }

    double p_zero() const noexcept { return q.empty() ? 0.0 : q[0]; }

    // P(X > 0), summed directly over positive atoms (no cancellation).
    double survival() const noexcept {
        CompensatedSum s;
        for (std::size_t k = 1; k < q.size(); ++k) s.add(std::ldexp(q[k], -static_cast<int>(k)));
        return s.value();
    }

    double total_mass() const noexcept {
        CompensatedSum s;
        for (std::size_t k = 0; k < q.size(); ++k) s.add(std::ldexp(q[k], -static_cast<int>(k)));
        return s.value();
    }

    double mean() const noexcept {
        CompensatedSum s;
        for (std::size_t k = 1; k < q.size(); ++k)
            s.add(static_cast<double>(k) * std::ldexp(q[k], -static_cast<int>(k)));
        return s.value();
    }

    double h2() const noexcept {
        CompensatedSum s;
        for (double v : q) s.add(v);
        return s.value();
    }

    void trim() {
        while (!q.empty() && q.back() == 0.0) q.pop_back();
    }

    // Rescales so the law has total mass exactly 1. The convolution squares
    // total mass, so a half-ulp defect in the initial normalization doubles
    // every generation and would swamp a long run; rescaling removes that
    // unstable mode (exact no-op for dyadic laws).
    void normalize() {
        const double total = total_mass();
        if (total == 1.0 || total <= 0.0) return;
        for (double& v : q) v /= total;
    }
};

// H(z) = <z^X>. For z > 2 the stored support is finite by construction;
// the tail removed by truncation is not recoverable and h2-style caveats
// apply (ledger carries the record).
inline double gen_fn(const TiltedPmf& pmf, double z) {
    if (z < 0.0) throw std::invalid_argument("gen_fn: z must be >= 0");
    CompensatedSum s;
    double r = 1.0;  // (z/2)^k
    const double half_z = z / 2.0;
    for (std::size_t k = 0; k < pmf.q.size(); ++k) {
        s.add(pmf.q[k] * r);
        r *= half_z;
    }
    s.add(pmf.lost_mass);
    return s.value();
}

// <X^m 2^X>. m = 0 reduces to <2^X> including the zero-atom ledger.
inline double tilted_moment(const TiltedPmf& pmf, int m) {
    if (m < 0) throw std::invalid_argument("tilted_moment: order must be >= 0");
    if (m == 0) return pmf.h2();
    CompensatedSum s;
    for (std::size_t k = 1; k < pmf.q.size(); ++k)
        s.add(std::pow(static_cast<double>(k), m) * pmf.q[k]);
    return s.value();
}

struct DeltaEstimate {
    double value = 0.0;
    bool reliable = true;  // false once truncation removed enough tilted mass
};

// Delta = 2 H'(2) - H(2) = <X 2^X> - <2^X>, the distance to the critical
// manifold. Flagged unreliable when the tilted ledger exceeds the threshold.
inline DeltaEstimate delta(const TiltedPmf& pmf, double tilted_loss_threshold = 1e-9) {
    CompensatedSum s;
    for (std::size_t k = 0; k < pmf.q.size(); ++k)
        s.add((static_cast<double>(k) - 1.0) * pmf.q[k]);
    s.add(-pmf.lost_mass);
    return {s.value(), pmf.lost_tilted_mass <= tilted_loss_threshold};
}

inline double delta_value(const TiltedPmf& pmf) { return delta(pmf).value; }

enum class ConvMethod { Auto, Quadratic, Fft };

namespace detail {

inline std::vector<double> conv_quadratic(const std::vector<double>& a,
                                          const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += ai * b[j];
    }
    return c;
}

inline std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// Real-to-complex FFT power: returns the m-fold linear self-convolution of a.
// Plan creation is serialized (FFTW planner is not thread safe); execution
// runs unlocked on per-call buffers.
inline std::vector<double> conv_fft_power(const std::vector<double>& a, int m) {
    const std::size_t out_len = m * (a.size() - 1) + 1;
    const std::size_t n = next_pow2(out_len);
    double* buf = fftw_alloc_real(n);
    fftw_complex* freq = fftw_alloc_complex(n / 2 + 1);
    std::copy(a.begin(), a.end(), buf);
    std::fill(buf + a.size(), buf + n, 0.0);
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf, freq, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq, buf, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
        double re = freq[i][0], im = freq[i][1];
        double pr = re, pi = im;
        for (int k = 1; k < m; ++k) {
            const double nr = pr * re - pi * im;
            pi = pr * im + pi * re;
            pr = nr;
        }
        freq[i][0] = pr;
        freq[i][1] = pi;
    }
    fftw_execute(bwd);
    std::vector<double> c(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double v = buf[i] * scale;
        c[i] = v > 0.0 ? v : 0.0;  // clip FFT round-off noise below zero
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(buf);
    fftw_free(freq);
    return c;
}

inline std::vector<double> conv_fft(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);
    double* bufa = fftw_alloc_real(n);
    double* bufb = fftw_alloc_real(n);
    fftw_complex* fa = fftw_alloc_complex(n / 2 + 1);
    fftw_complex* fb = fftw_alloc_complex(n / 2 + 1);
    std::copy(a.begin(), a.end(), bufa);
    std::fill(bufa + a.size(), bufa + n, 0.0);
    std::copy(b.begin(), b.end(), bufb);
    std::fill(bufb + b.size(), bufb + n, 0.0);
    fftw_plan fwda, fwdb, bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fwda = fftw_plan_dft_r2c_1d(static_cast<int>(n), bufa, fa, FFTW_ESTIMATE);
        fwdb = fftw_plan_dft_r2c_1d(static_cast<int>(n), bufb, fb, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa, bufa, FFTW_ESTIMATE);
    }
    fftw_execute(fwda);
    fftw_execute(fwdb);
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
        const double re = fa[i][0] * fb[i][0] - fa[i][1] * fb[i][1];
        const double im = fa[i][0] * fb[i][1] + fa[i][1] * fb[i][0];
        fa[i][0] = re;
        fa[i][1] = im;
    }
    fftw_execute(bwd);
    std::vector<double> c(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double v = bufa[i] * scale;
        c[i] = v > 0.0 ? v : 0.0;
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwda);
        fftw_destroy_plan(fwdb);
        fftw_destroy_plan(bwd);
    }
    fftw_free(bufa);
    fftw_free(bufb);
    fftw_free(fa);
    fftw_free(fb);
    return c;
}

}  // namespace detail

// Quadratic path switches to FFT above this output size under Auto.
inline constexpr std::size_t kConvFftThreshold = 4096;
// FFT refuses outputs beyond this size; keeps a typo'd config from
// allocating the machine away.
inline constexpr std::size_t kConvFftSizeLimit = std::size_t(1) << 24;

// Law of X + X' for independent X ~ a, X' ~ b. Tilted weights convolve
// exactly: 2^k factors across a sum. Ledgers add; the cross term
// lost_a * lost_b is quadratically small and stays parked at the zero atom,
// which only ever lowers the law (floor semantics).
inline TiltedPmf convolve(const TiltedPmf& a, const TiltedPmf& b,
                          ConvMethod method = ConvMethod::Auto) {
    if (a.q.empty() || b.q.empty())
        throw std::invalid_argument("convolve: empty operand");
    const std::size_t out_len = a.q.size() + b.q.size() - 1;
    if (method == ConvMethod::Auto)
        method = out_len <= kConvFftThreshold ? ConvMethod::Quadratic : ConvMethod::Fft;
    if (method == ConvMethod::Fft && out_len > kConvFftSizeLimit)
        throw std::length_error("convolve: fft support above configured size limit (" +
                                std::to_string(out_len) + " > " +
                                std::to_string(kConvFftSizeLimit) + ")");
    TiltedPmf out;
    out.q = method == ConvMethod::Quadratic ? detail::conv_quadratic(a.q, b.q)
                                            : detail::conv_fft(a.q, b.q);
    out.lost_mass = a.lost_mass + b.lost_mass;
    out.lost_tilted_mass = a.lost_tilted_mass + b.lost_tilted_mass;
    return out;
}

// Floor truncation: atoms above max_k move their plain mass to the zero
// atom (stochastically smaller law, so downstream survival / mean / free
// energy stay certified lower bounds); the ledger records the damage.
inline void truncate_floor(TiltedPmf& pmf, std::int64_t max_k) {
    if (pmf.k_max() <= max_k) return;
    CompensatedSum plain, tilted;
    for (std::size_t k = static_cast<std::size_t>(max_k) + 1; k < pmf.q.size(); ++k) {
        tilted.add(pmf.q[k]);
        plain.add(std::ldexp(pmf.q[k], -static_cast<int>(k)));
    }
    pmf.q.resize(static_cast<std::size_t>(max_k) + 1);
    pmf.lost_mass += plain.value();
    pmf.lost_tilted_mass += tilted.value();
    pmf.trim();
}

// One generation: law of max(X^(1) + ... + X^(m) - 1, 0), truncated to
// max_k. The sum's mass at 0 and 1 both land on the new zero atom; in
// tilted space the downshift is a halving.
inline TiltedPmf evolve_step(const TiltedPmf& pmf, int m, std::int64_t max_k,
                             ConvMethod method = ConvMethod::Auto) {
    if (m < 2) throw std::invalid_argument("evolve_step: m must be >= 2");
    if (pmf.q.empty()) throw std::invalid_argument("evolve_step: empty pmf");

    std::vector<double> c;
    const std::size_t out_len = static_cast<std::size_t>(m) * (pmf.q.size() - 1) + 1;
    ConvMethod eff = method;
    if (eff == ConvMethod::Auto)
        eff = out_len <= kConvFftThreshold ? ConvMethod::Quadratic : ConvMethod::Fft;
    if (eff == ConvMethod::Fft && out_len > kConvFftSizeLimit)
        throw std::length_error("evolve_step: fft support above configured size limit");
    if (eff == ConvMethod::Quadratic) {
        c = pmf.q;
        for (int i = 1; i < m; ++i) c = detail::conv_quadratic(c, pmf.q);
    } else {
        c = detail::conv_fft_power(pmf.q, m);
    }

    TiltedPmf out;
    out.lost_mass = m * pmf.lost_mass;
    out.lost_tilted_mass = m * pmf.lost_tilted_mass;
    out.q.resize(c.size() > 1 ? c.size() - 1 : 1, 0.0);
    out.q[0] = c[0] + (c.size() > 1 ? 0.5 * c[1] : 0.0);
    for (std::size_t j = 1; j + 1 < c.size(); ++j) out.q[j] = 0.5 * c[j + 1];
    out.trim();
    truncate_floor(out, max_k);
    out.normalize();
    return out;
}

}  // namespace drlab
