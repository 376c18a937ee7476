#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "drlab/numerics.hpp"
#include "drlab/pmf.hpp"

namespace drlab {

// Parametric initial-law families.
//
//   dirac-mixture    P = p*delta_a + (1-p)*delta_0
//   heavy-tail-alpha P = p*P* + (1-p)*delta_0,  P*(k) ~ k^-alpha 2^-k on
//                    [k_min, k_cap], normalized over that range
//   heavy-tail-beta  P = p*P* + (1-p)*delta_0,  P*(k) = C*(t_k - t_{k+1})
//                    with t_k = k^-beta 2^-k, so P*(X >= k) = C*t_k by
//                    telescoping; <X 2^X> diverges as k_cap grows (beta < 2)
//
// k_cap is the realization cap for the infinite families and is part of the
// studied object; realized pmfs normalize to 1 over the capped support.
struct InitialLaw {
    enum class Kind { DiracMixture, HeavyTailAlpha, HeavyTailBeta };

    Kind kind = Kind::DiracMixture;
    double p = 1.0;               // mixing weight of the non-zero component
    std::int64_t a = 2;           // dirac-mixture atom
    double alpha = 3.0;           // heavy-tail-alpha exponent, in (2, 4]
    double beta = 1.0;            // heavy-tail-beta exponent, < 2
    std::int64_t k_min = 1;       // first atom of heavy-tail-alpha
    std::int64_t k_cap = 4096;    // realization cap for the heavy-tail families

    static InitialLaw dirac_mixture(std::int64_t a, double p) {
        InitialLaw law;
        law.kind = Kind::DiracMixture;
        law.a = a;
        law.p = p;
        return law;
    }
    static InitialLaw heavy_tail_alpha(double alpha, double p = 1.0, std::int64_t k_min = 1,
                                       std::int64_t k_cap = 4096) {
        InitialLaw law;
        law.kind = Kind::HeavyTailAlpha;
        law.alpha = alpha;
        law.p = p;
        law.k_min = k_min;
        law.k_cap = k_cap;
        return law;
    }
    static InitialLaw heavy_tail_beta(double beta, double p, std::int64_t k_cap = 4096) {
        InitialLaw law;
        law.kind = Kind::HeavyTailBeta;
        law.beta = beta;
        law.p = p;
        law.k_cap = k_cap;
        return law;
    }

    InitialLaw with_p(double new_p) const {
        InitialLaw law = *this;
        law.p = new_p;
        return law;
    }

    std::string kind_name() const {
        switch (kind) {
            case Kind::DiracMixture: return "dirac-mixture";
            case Kind::HeavyTailAlpha: return "heavy-tail-alpha";
            case Kind::HeavyTailBeta: return "heavy-tail-beta";
        }
        return "?";
    }

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("InitialLaw: p outside [0,1]");
        switch (kind) {
            case Kind::DiracMixture:
                if (a < 1) throw std::invalid_argument("InitialLaw: dirac atom must be >= 1");
                break;
            case Kind::HeavyTailAlpha:
                if (!(alpha > 2.0 && alpha <= 4.0))
                    throw std::invalid_argument("InitialLaw: alpha outside (2,4]");
                if (k_min < 1) throw std::invalid_argument("InitialLaw: k_min must be >= 1");
                if (k_cap < k_min + 1) throw std::invalid_argument("InitialLaw: k_cap too small");
                break;
            case Kind::HeavyTailBeta:
                if (!(beta < 2.0)) throw std::invalid_argument("InitialLaw: beta must be < 2");
                if (k_cap < 2) throw std::invalid_argument("InitialLaw: k_cap too small");
                break;
        }
    }
};

// Realizes the law as tilted weights over k = 0..k_cap. Laws with
// P(X >= 2) = 0 freeze the recursion into a trivial fixed shape and are
// rejected unless allow_degenerate is set (the boundary study passes it).
inline TiltedPmf pmf_from_law(const InitialLaw& law, std::int64_t k_cap,
                              bool allow_degenerate = false) {
    law.validate();
    TiltedPmf pmf;
    switch (law.kind) {
        case InitialLaw::Kind::DiracMixture: {
            if (k_cap < law.a)
                throw std::invalid_argument("pmf_from_law: k_cap below the dirac atom");
            pmf.q.assign(static_cast<std::size_t>(law.a) + 1, 0.0);
            pmf.q[0] = 1.0 - law.p;
            pmf.q[static_cast<std::size_t>(law.a)] = std::ldexp(law.p, static_cast<int>(law.a));
            break;
        }
        case InitialLaw::Kind::HeavyTailAlpha: {
            const std::int64_t cap = std::min(k_cap, law.k_cap);
            if (cap < law.k_min + 1)
                throw std::invalid_argument("pmf_from_law: cap below k_min + 1");
            // plain weights k^-alpha 2^-k; normalize over the capped range,
            // then tilt: q[k] = c0 * k^-alpha.
            CompensatedSum z;
            for (std::int64_t k = law.k_min; k <= cap; ++k)
                z.add(std::pow(static_cast<double>(k), -law.alpha) * std::ldexp(1.0, static_cast<int>(-k)));
            const double c0 = 1.0 / z.value();
            pmf.q.assign(static_cast<std::size_t>(cap) + 1, 0.0);
            pmf.q[0] = 1.0 - law.p;
            for (std::int64_t k = law.k_min; k <= cap; ++k)
                pmf.q[static_cast<std::size_t>(k)] =
                    law.p * c0 * std::pow(static_cast<double>(k), -law.alpha);
            break;
        }
        case InitialLaw::Kind::HeavyTailBeta: {
            const std::int64_t cap = std::min(k_cap, law.k_cap);
            if (cap < 2) throw std::invalid_argument("pmf_from_law: cap below 2");
            // tail differences of t_k = k^-beta 2^-k; tilted form
            // q[k] = C * (k^-beta - (k+1)^-beta / 2).
            auto t = [&](std::int64_t k) {
                return std::pow(static_cast<double>(k), -law.beta) *
                       std::ldexp(1.0, static_cast<int>(-k));
            };
            const double norm = 1.0 / (t(1) - t(cap + 1));
            pmf.q.assign(static_cast<std::size_t>(cap) + 1, 0.0);
            pmf.q[0] = 1.0 - law.p;
            for (std::int64_t k = 1; k <= cap; ++k) {
                const double plain = norm * (t(k) - t(k + 1));
                pmf.q[static_cast<std::size_t>(k)] =
                    law.p * std::ldexp(plain, static_cast<int>(k));
            }
            break;
        }
    }
    pmf.trim();
    if (!allow_degenerate) {
        double mass_ge2 = 0.0;
        for (std::size_t k = 2; k < pmf.q.size(); ++k)
            mass_ge2 += std::ldexp(pmf.q[k], -static_cast<int>(k));
        if (mass_ge2 <= 0.0)
            throw std::domain_error(
                "pmf_from_law: P(X0 >= 2) = 0 freezes the recursion; pass allow_degenerate to "
                "study it anyway");
    }
    return pmf;
}

inline TiltedPmf pmf_from_law(const InitialLaw& law) {
    return pmf_from_law(law, law.kind == InitialLaw::Kind::DiracMixture ? law.a : law.k_cap);
}

}  // namespace drlab
