#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "drlab/law.hpp"
#include "drlab/pmf.hpp"
#include "drlab/rng.hpp"

using namespace drlab;

namespace {

constexpr std::int64_t kNoCap = std::numeric_limits<std::int64_t>::max() / 2;

TiltedPmf two_atom(double p0, std::int64_t a, double pa) {
    TiltedPmf pmf;
    pmf.q.assign(static_cast<std::size_t>(a) + 1, 0.0);
    pmf.q[0] = p0;
    pmf.q[static_cast<std::size_t>(a)] = std::ldexp(pa, static_cast<int>(a));
    return pmf;
}

// Random law drawn in tilted coordinates (uniform q, normalized), the
// scale the convolution core actually runs in.
TiltedPmf random_pmf(Rng& rng, std::size_t support) {
    TiltedPmf pmf;
    pmf.q.resize(support);
    double total = 0.0;
    for (std::size_t k = 0; k < support; ++k) {
        pmf.q[k] = rng.uniform01();
        total += std::ldexp(pmf.q[k], -static_cast<int>(k));
    }
    for (auto& v : pmf.q) v /= total;
    return pmf;
}

// Plain-space pair enumeration of one step, the independent route.
std::vector<double> enumerate_step(const std::vector<double>& plain) {
    std::vector<double> out(plain.size() * 2, 0.0);
    for (std::size_t i = 0; i < plain.size(); ++i)
        for (std::size_t j = 0; j < plain.size(); ++j) {
            const std::int64_t v =
                std::max<std::int64_t>(static_cast<std::int64_t>(i + j) - 1, 0);
            out[static_cast<std::size_t>(v)] += plain[i] * plain[j];
        }
    return out;
}

}  // namespace

TEST_CASE("tilted weights of simple laws") {
    const TiltedPmf pmf = two_atom(0.5, 2, 0.5);
    REQUIRE(pmf.q.size() == 3);
    CHECK(pmf.q[0] == 0.5);
    CHECK(pmf.q[1] == 0.0);
    CHECK(pmf.q[2] == 2.0);
    CHECK(pmf.p(2) == 0.5);
    CHECK(pmf.total_mass() == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("gen_fn basics") {
    const TiltedPmf mix = two_atom(0.5, 2, 0.5);
    CHECK(gen_fn(mix, 2.0) == Catch::Approx(2.5).margin(1e-15));
    CHECK(gen_fn(mix, 1.0) == Catch::Approx(1.0).margin(1e-15));

    TiltedPmf d0;
    d0.q = {1.0};
    CHECK(gen_fn(d0, 0.7) == 1.0);
    CHECK(gen_fn(d0, 3.0) == 1.0);

    // z = 1 returns the retained mass once truncation removed some
    TiltedPmf trunc = two_atom(0.5, 2, 0.5);
    truncate_floor(trunc, 1);
    CHECK(gen_fn(trunc, 1.0) == Catch::Approx(1.0).margin(1e-15));  // floor keeps mass at 0
    CHECK(trunc.lost_mass == Catch::Approx(0.5).margin(1e-15));
    CHECK(trunc.lost_tilted_mass == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("tilted moments") {
    const TiltedPmf mix = two_atom(0.5, 2, 0.5);
    CHECK(tilted_moment(mix, 1) == Catch::Approx(4.0).margin(1e-15));
    CHECK(tilted_moment(mix, 0) == Catch::Approx(mix.h2()).margin(1e-15));

    TiltedPmf d2 = two_atom(0.0, 2, 1.0);
    CHECK(tilted_moment(d2, 3) == Catch::Approx(32.0).margin(1e-12));
}

TEST_CASE("delta closed forms") {
    for (double p : {0.0, 0.1, 0.2, 0.5, 0.9}) {
        const TiltedPmf pmf = two_atom(1.0 - p, 2, p);
        CHECK(delta(pmf).value == Catch::Approx(5.0 * p - 1.0).margin(1e-14));
    }
    TiltedPmf d0;
    d0.q = {1.0};
    CHECK(delta(d0).value == Catch::Approx(-1.0).margin(1e-15));
    CHECK(delta(two_atom(0.5, 2, 0.5)).value == Catch::Approx(1.5).margin(1e-15));
}

TEST_CASE("delta reliability flag tracks the tilted ledger") {
    TiltedPmf pmf = two_atom(0.5, 2, 0.5);
    CHECK(delta(pmf).reliable);
    pmf.lost_tilted_mass = 1e-3;
    CHECK_FALSE(delta(pmf).reliable);
}

TEST_CASE("convolution of atoms") {
    TiltedPmf d2 = two_atom(0.0, 2, 1.0);
    const TiltedPmf d4 = convolve(d2, d2, ConvMethod::Quadratic);
    REQUIRE(d4.q.size() == 5);
    CHECK(d4.q[4] == Catch::Approx(16.0).margin(1e-12));
    CHECK(d4.p(4) == Catch::Approx(1.0).margin(1e-15));

    const TiltedPmf mix = two_atom(0.5, 2, 0.5);
    const TiltedPmf sq = convolve(mix, mix, ConvMethod::Quadratic);
    CHECK(sq.p(0) == Catch::Approx(0.25).margin(1e-15));
    CHECK(sq.p(2) == Catch::Approx(0.5).margin(1e-15));
    CHECK(sq.p(4) == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("quadratic and fft convolutions agree") {
    Rng rng(20240901);
    const TiltedPmf a = random_pmf(rng, 512);
    const TiltedPmf quad = convolve(a, a, ConvMethod::Quadratic);
    const TiltedPmf fft = convolve(a, a, ConvMethod::Fft);
    REQUIRE(quad.q.size() == fft.q.size());
    for (std::size_t k = 0; k < quad.q.size(); ++k) {
        if (quad.q[k] < 1e-300) continue;
        CHECK(std::abs(fft.q[k] - quad.q[k]) <= 1e-10 * quad.q[k]);
    }
}

TEST_CASE("fft refuses oversized supports") {
    TiltedPmf big;
    big.q.assign(kConvFftSizeLimit / 2 + 2, 0.0);
    big.q[0] = 1.0;
    CHECK_THROWS_AS(convolve(big, big, ConvMethod::Fft), std::length_error);
}

TEST_CASE("convolve adds ledgers") {
    TiltedPmf a = two_atom(0.5, 2, 0.5);
    a.lost_mass = 1e-6;
    a.lost_tilted_mass = 3e-5;
    TiltedPmf b = two_atom(0.2, 2, 0.8);
    b.lost_mass = 2e-6;
    b.lost_tilted_mass = 1e-5;
    const TiltedPmf c = convolve(a, b, ConvMethod::Quadratic);
    CHECK(c.lost_mass == Catch::Approx(3e-6).margin(1e-18));
    CHECK(c.lost_tilted_mass == Catch::Approx(4e-5).margin(1e-18));
}

TEST_CASE("one-step evolution examples") {
    SECTION("deterministic atom") {
        TiltedPmf d2 = two_atom(0.0, 2, 1.0);
        const TiltedPmf next = evolve_step(d2, 2, kNoCap);
        CHECK(next.p(3) == Catch::Approx(1.0).margin(1e-15));
        CHECK(next.k_max() == 3);
    }
    SECTION("half-half mixture") {
        const TiltedPmf next = evolve_step(two_atom(0.5, 2, 0.5), 2, kNoCap);
        CHECK(next.p(0) == Catch::Approx(0.25).margin(1e-15));
        CHECK(next.p(1) == Catch::Approx(0.5).margin(1e-15));
        CHECK(next.p(3) == Catch::Approx(0.25).margin(1e-15));
    }
    SECTION("zero is absorbing") {
        TiltedPmf d0;
        d0.q = {1.0};
        const TiltedPmf next = evolve_step(d0, 2, kNoCap);
        REQUIRE(next.q.size() == 1);
        CHECK(next.q[0] == 1.0);
    }
    SECTION("critical mixture") {
        const TiltedPmf next = evolve_step(two_atom(0.8, 2, 0.2), 2, kNoCap);
        CHECK(next.p(0) == Catch::Approx(16.0 / 25.0).margin(1e-15));
        CHECK(next.p(1) == Catch::Approx(8.0 / 25.0).margin(1e-15));
        CHECK(next.p(3) == Catch::Approx(1.0 / 25.0).margin(1e-15));
    }
    SECTION("three parents") {
        TiltedPmf d2 = two_atom(0.0, 2, 1.0);
        const TiltedPmf next = evolve_step(d2, 3, kNoCap);
        CHECK(next.p(5) == Catch::Approx(1.0).margin(1e-13));
    }
}

TEST_CASE("evolve_step matches pair enumeration on random small laws") {
    Rng rng(7071);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t support = 2 + static_cast<std::size_t>(rng.next() % 7);
        const TiltedPmf pmf = random_pmf(rng, support);
        std::vector<double> plain(support);
        for (std::size_t k = 0; k < support; ++k) plain[k] = pmf.p(static_cast<std::int64_t>(k));
        const std::vector<double> expect = enumerate_step(plain);
        const TiltedPmf got = evolve_step(pmf, 2, kNoCap);
        for (std::size_t k = 0; k < expect.size(); ++k) {
            CHECK(std::abs(got.p(static_cast<std::int64_t>(k)) - expect[k]) <=
                  1e-14 * std::max(expect[k], 1e-30));
        }
    }
}

TEST_CASE("delta propagates through one exact step") {
    // Delta(step(mu)) = H_mu(2) * Delta(mu) for the exact two-parent map.
    Rng rng(5150);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t support = 2 + static_cast<std::size_t>(rng.next() % 9);
        const TiltedPmf pmf = random_pmf(rng, support);
        const double lhs = delta(evolve_step(pmf, 2, kNoCap)).value;
        const double rhs = gen_fn(pmf, 2.0) * delta(pmf).value;
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(rhs), 1e-12));
    }
}

TEST_CASE("normalization ledger under truncation") {
    Rng rng(99);
    TiltedPmf pmf = random_pmf(rng, 40);
    for (int step = 0; step < 6; ++step) {
        pmf = evolve_step(pmf, 2, 24);
        CHECK(pmf.total_mass() == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(pmf.lost_mass > 0.0);
    CHECK(pmf.lost_tilted_mass >= pmf.lost_mass);
}

TEST_CASE("floor truncation dominates wider caps") {
    // survival and mean under a tight floor cap never exceed the wider run
    Rng rng(424242);
    const TiltedPmf pmf0 = random_pmf(rng, 32);
    TiltedPmf tight = pmf0, wide = pmf0;
    for (int step = 0; step < 8; ++step) {
        tight = evolve_step(tight, 2, 20);
        wide = evolve_step(wide, 2, 60);
        CHECK(tight.survival() <= wide.survival() + 1e-14);
        CHECK(tight.mean() <= wide.mean() + 1e-12);
    }
}
