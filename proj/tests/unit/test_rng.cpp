#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "voxkit/voxkit.hpp"

using namespace voxkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("the raw word stream is the standard 64-bit Mersenne Twister") {
    // The C++ standard pins this value for the 10000th draw from the
    // default seed, so it doubles as a cross-platform anchor.
    std::mt19937_64 reference(5489);
    reference.discard(9999);
    const std::uint64_t want = reference();
    REQUIRE(want == 9981545732273789042ull);

    Rng rng(5489);
    for (int i = 0; i < 9999; ++i) {
        rng.next_u64();
    }
    REQUIRE(rng.next_u64() == want);
}

TEST_CASE("stream seed derivation matches the reference values") {
    REQUIRE(derive_stream_seed(123, 0) == 13032462758197477675ull);
    REQUIRE(derive_stream_seed(123, 1) == 18015028434894305148ull);
    REQUIRE(derive_stream_seed(123, 2) == 15857969311440292840ull);
    REQUIRE(derive_stream_seed(0, 0) == 16294208416658607535ull);
    // Distinct indices give distinct streams.
    REQUIRE(derive_stream_seed(7, 0) != derive_stream_seed(7, 1));
}

TEST_CASE("unit_open_closed maps the word range onto (0, 1]") {
    // The mapping is ((x >> 11) + 1) * 2^-53; check both extremes through
    // a mocked view of the arithmetic and the live stream.
    REQUIRE((static_cast<double>((std::uint64_t{0} >> 11) + 1) * 0x1p-53) == 0x1p-53);
    REQUIRE((static_cast<double>((~std::uint64_t{0} >> 11) + 1) * 0x1p-53) == 1.0);

    Rng rng(99);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.unit_open_closed();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
}

TEST_CASE("gaussian draws replay the reference stream") {
    const double want[6] = {
        -0.4812176998018444,  -0.5745368738983061, 0.49458385623521306,
        0.5701215522073743,   0.3745542688498134,  0.25135417655083514,
    };
    Rng rng(42);
    for (double expected : want) {
        REQUIRE_THAT(rng.gaussian(), WithinRel(expected, 1e-12));
    }
}

TEST_CASE("gaussian moments match the requested scale") {
    Rng rng(2024);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gaussian(2.0);
        sum += x;
        sum2 += x * x;
    }
    const double m = sum / n;
    const double var = sum2 / n - m * m;
    REQUIRE_THAT(m, WithinAbs(0.0, 0.05));
    REQUIRE_THAT(var, WithinRel(4.0, 0.05));
}

TEST_CASE("bounded draws are in range and reach every residue") {
    Rng rng(7);
    REQUIRE_THROWS_AS(rng.bounded(0), InvalidInputError);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(rng.bounded(1) == 0u);
    }
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::uint64_t x = rng.bounded(7);
        REQUIRE(x < 7u);
        seen.insert(x);
    }
    REQUIRE(seen.size() == 7u);
}

TEST_CASE("poisson sampling rejects negative rates and fixes rate zero") {
    Rng rng(5);
    REQUIRE_THROWS_AS(rng.poisson(-0.1), InvalidInputError);
    for (int i = 0; i < 200; ++i) {
        REQUIRE(rng.poisson(0.0) == 0u);
    }
}

TEST_CASE("poisson moments match at small and chunked rates") {
    SECTION("rate 4.2") {
        Rng rng(31);
        const int n = 50000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(rng.poisson(4.2));
            sum += x;
            sum2 += x * x;
        }
        const double m = sum / n;
        REQUIRE_THAT(m, WithinRel(4.2, 0.05));
        REQUIRE_THAT(sum2 / n - m * m, WithinRel(4.2, 0.07));
    }
    SECTION("rate 100, above the chunking threshold") {
        Rng rng(32);
        const int n = 20000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(rng.poisson(100.0));
            sum += x;
            sum2 += x * x;
        }
        const double m = sum / n;
        REQUIRE_THAT(m, WithinRel(100.0, 0.03));
        REQUIRE_THAT(sum2 / n - m * m, WithinRel(100.0, 0.07));
    }
}

TEST_CASE("subset sampling replays the reference selections") {
    const std::vector<std::size_t> want{4, 12, 16, 8, 9, 11, 7, 6, 13, 1};
    REQUIRE(sample_without_replacement(20, 10, 20240816) == want);

    const std::vector<std::size_t> full{3, 1, 4, 0, 5, 2};
    REQUIRE(sample_without_replacement(6, 6, 7) == full);
}

TEST_CASE("subset sampling draws distinct in-range indices") {
    const auto picks = sample_without_replacement(100, 37, 555);
    REQUIRE(picks.size() == 37u);
    std::set<std::size_t> unique(picks.begin(), picks.end());
    REQUIRE(unique.size() == 37u);
    REQUIRE(*std::max_element(picks.begin(), picks.end()) < 100u);

    REQUIRE(sample_without_replacement(5, 0, 1).empty());
    REQUIRE_THROWS_AS(sample_without_replacement(5, 6, 1), InvalidInputError);
}
