#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "support/testutil.hpp"
#include "voxkit/voxkit.hpp"

using namespace voxkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SegmentationMask mask_of(const std::vector<std::uint8_t>& bits) {
    return SegmentationMask(Dims3{1, 1, bits.size()}, bits);
}

} // namespace

TEST_CASE("pseudo-labeling partitions the probability grid as expected") {
    // p = i/20 for i = 0..20 with the default threshold 0.85. The exact
    // boundary cases: p = 0.15 is background because 1 - 0.15 >= 0.85
    // holds in double arithmetic, and p = 0.85 is foreground.
    ProbabilityVolume probs(Dims3{1, 1, 21});
    for (std::size_t i = 0; i < 21; ++i) {
        probs[i] = static_cast<double>(i) / 20.0;
    }
    const PseudoLabelVolume labels = pseudo_label(probs);

    std::string got;
    for (PseudoLabel l : labels) {
        got += l == PseudoLabel::foreground ? 'F'
             : l == PseudoLabel::background ? 'B'
                                            : 'I';
    }
    REQUIRE(got == "BBBBIIIIIIIIIIIIIFFFF");
}

TEST_CASE("the foreground-only rule never assigns background") {
    ProbabilityVolume probs(Dims3{1, 1, 21});
    for (std::size_t i = 0; i < 21; ++i) {
        probs[i] = static_cast<double>(i) / 20.0;
    }
    const PseudoLabelVolume labels = pseudo_label(probs, 0.85, LabelRule::foreground_only);
    std::string got;
    for (PseudoLabel l : labels) {
        got += l == PseudoLabel::foreground ? 'F'
             : l == PseudoLabel::background ? 'B'
                                            : 'I';
    }
    REQUIRE(got == "IIIIIIIIIIIIIIIIIFFFF");
}

TEST_CASE("pseudo-labeling validates threshold and probabilities") {
    ProbabilityVolume probs(Dims3{1, 1, 2});
    probs[0] = 0.3;
    probs[1] = 0.9;
    REQUIRE_THROWS_AS(pseudo_label(probs, 0.5), InvalidInputError);
    REQUIRE_THROWS_AS(pseudo_label(probs, 1.01), InvalidInputError);
    REQUIRE_THROWS_AS(pseudo_label(probs, 0.0), InvalidInputError);
    REQUIRE_NOTHROW(pseudo_label(probs, 1.0));

    probs[1] = 1.5;
    REQUIRE_THROWS_AS(pseudo_label(probs), InvalidInputError);
    probs[1] = -0.1;
    REQUIRE_THROWS_AS(pseudo_label(probs), InvalidInputError);
    probs[1] = std::nan("");
    REQUIRE_THROWS_AS(pseudo_label(probs), InvalidInputError);
    REQUIRE_THROWS_AS(pseudo_label(ProbabilityVolume{}), InvalidInputError);
}

TEST_CASE("an exponential moving average step blends linearly") {
    const ParameterVector teacher{1.0, 0.0, -2.0};
    const ParameterVector student{0.0, 1.0, 2.0};
    const ParameterVector out = ema_update(teacher, student, 0.999);
    REQUIRE_THAT(out[0], WithinRel(0.999, 1e-15));
    REQUIRE_THAT(out[1], WithinRel(0.001, 1e-12));
    REQUIRE_THAT(out[2], WithinRel(-2.0 * 0.999 + 2.0 * 0.001, 1e-12));

    REQUIRE(ema_update(teacher, student, 1.0) == teacher);
    REQUIRE(ema_update(teacher, student, 0.0) == student);

    REQUIRE_THROWS_AS(ema_update(teacher, {1.0}, 0.5), InvalidInputError);
    REQUIRE_THROWS_AS(ema_update(teacher, student, -0.1), InvalidInputError);
    REQUIRE_THROWS_AS(ema_update(teacher, student, 1.1), InvalidInputError);
}

TEST_CASE("repeated averaging contracts geometrically toward the student") {
    // With a constant student, t_k - s = m^k (t_0 - s) exactly in real
    // arithmetic; the float evaluation must stay within 1e-12 of it.
    const double m = 0.9;
    const ParameterVector student{2.0};
    ParameterVector t{10.0};
    double factor = 1.0;
    for (int k = 1; k <= 50; ++k) {
        t = ema_update(t, student, m);
        factor *= m;
        const double want = factor * (10.0 - 2.0) + 2.0;
        REQUIRE_THAT(t[0], WithinAbs(want, 1e-12));
    }
    REQUIRE(std::abs(t[0] - 2.0) < 8.0 * std::pow(0.9, 49));
}

TEST_CASE("consistency loss hits its analytic endpoints") {
    auto embed = [](std::vector<double> v) {
        FeatureEmbedding e;
        for (auto& level : e.levels) {
            level = v;
        }
        return e;
    };
    const FeatureEmbedding a = embed({1.0, 0.0});
    SECTION("identical embeddings cost nothing") {
        REQUIRE_THAT(consistency_loss(a, a), WithinAbs(0.0, 1e-15));
        // Positive scaling leaves the cosine at 1.
        REQUIRE_THAT(consistency_loss(a, embed({2.5, 0.0})), WithinAbs(0.0, 1e-15));
    }
    SECTION("orthogonal embeddings cost the weight sum") {
        REQUIRE_THAT(consistency_loss(a, embed({0.0, 3.0})), WithinRel(1.0, 1e-12));
    }
    SECTION("opposite embeddings cost twice the weight sum") {
        REQUIRE_THAT(consistency_loss(a, embed({-4.0, 0.0})), WithinRel(2.0, 1e-12));
    }
    SECTION("per-level weights scale independently") {
        FeatureEmbedding b = a;
        b.levels[0] = {-1.0, 0.0}; // anti-parallel on level 0 only
        REQUIRE_THAT(consistency_loss(a, b), WithinRel(2.0 * 0.2, 1e-12));
        FeatureEmbedding c = a;
        c.levels[3] = {0.0, 1.0}; // orthogonal on level 3 only
        REQUIRE_THAT(consistency_loss(a, c), WithinRel(0.3, 1e-12));
    }
    SECTION("custom weights") {
        ConsistencyWeights w;
        w.lambda = {1.0, 0.0, 0.0, 0.0};
        REQUIRE_THAT(consistency_loss(a, embed({-1.0, 0.0}), w), WithinRel(2.0, 1e-12));
        w.lambda = {-1.0, 0.0, 0.0, 0.0};
        REQUIRE_THROWS_AS(consistency_loss(a, a, w), InvalidInputError);
    }
    SECTION("degenerate inputs are rejected") {
        REQUIRE_THROWS_AS(consistency_loss(a, embed({0.0, 0.0})), InvalidInputError);
        FeatureEmbedding short_level = a;
        short_level.levels[2] = {1.0};
        REQUIRE_THROWS_AS(consistency_loss(a, short_level), InvalidInputError);
    }
}

TEST_CASE("masked supervision loss averages over labelled voxels only") {
    ProbabilityVolume probs(Dims3{1, 1, 3});
    probs[0] = 0.8;
    probs[1] = 0.4;
    probs[2] = 0.123; // ignored
    PseudoLabelVolume labels(Dims3{1, 1, 3}, PseudoLabel::ignore);
    labels[0] = PseudoLabel::foreground;
    labels[1] = PseudoLabel::background;

    // -(ln 0.8 + ln 0.6) / 2
    REQUIRE_THAT(masked_supervision_loss(probs, labels),
                 WithinRel(0.3669845875401002, 1e-14));

    SECTION("changing an ignored voxel's probability changes nothing") {
        const double before = masked_supervision_loss(probs, labels);
        probs[2] = 0.999;
        REQUIRE(masked_supervision_loss(probs, labels) == before);
    }

    SECTION("probabilities are clamped before the logarithm") {
        probs[0] = 0.0; // foreground with zero probability
        probs[1] = 1.0; // background with probability one
        const double loss = masked_supervision_loss(probs, labels);
        REQUIRE(std::isfinite(loss));
        // The background branch reconstructs its clamp bound as
        // 1 - (1 - 1e-7), which only matches 1e-7 to ~5e-10 relative.
        REQUIRE_THAT(loss, WithinRel(-std::log(1e-7), 1e-8));
    }

    SECTION("all-ignore input is rejected") {
        const PseudoLabelVolume blank(Dims3{1, 1, 3}, PseudoLabel::ignore);
        REQUIRE_THROWS_AS(masked_supervision_loss(probs, blank), InvalidInputError);
    }

    SECTION("extent mismatch is rejected") {
        const PseudoLabelVolume other(Dims3{1, 1, 4}, PseudoLabel::foreground);
        REQUIRE_THROWS_AS(masked_supervision_loss(probs, other), InvalidInputError);
    }
}

TEST_CASE("overlap scores match hand-counted fixtures") {
    // pred foreground {0..5}, truth foreground {4..6} on 10 voxels:
    //   foreground: intersection 2, union 7
    //   background: intersection 3, union 8
    const SegmentationMask pred = mask_of({1, 1, 1, 1, 1, 1, 0, 0, 0, 0});
    const SegmentationMask gt = mask_of({0, 0, 0, 0, 1, 1, 1, 0, 0, 0});

    REQUIRE_THAT(iou(pred, gt, true), WithinRel(2.0 / 7.0, 1e-15));
    REQUIRE_THAT(iou(pred, gt, false), WithinRel(3.0 / 8.0, 1e-15));
    REQUIRE_THAT(miou(pred, gt), WithinRel(0.5 * (2.0 / 7.0 + 3.0 / 8.0), 1e-15));
    // dice = 2 * inter / (|pred| + |gt|) = 4 / 9.
    REQUIRE_THAT(dice(pred, gt), WithinRel(4.0 / 9.0, 1e-15));

    // 8 predicted, 4 true, 4 shared: dice = 2 * 4 / 12 = 2/3.
    const SegmentationMask wide = mask_of({1, 1, 1, 1, 1, 1, 1, 1, 0, 0});
    const SegmentationMask narrow = mask_of({1, 1, 1, 1, 0, 0, 0, 0, 0, 0});
    REQUIRE_THAT(dice(wide, narrow), WithinRel(2.0 / 3.0, 1e-15));
    REQUIRE_THAT(iou(wide, narrow, true), WithinRel(0.5, 1e-15));
}

TEST_CASE("edge conventions for empty and identical masks") {
    const SegmentationMask zeros = mask_of({0, 0, 0, 0});
    const SegmentationMask ones = mask_of({1, 1, 1, 1});
    REQUIRE(dice(zeros, zeros) == 1.0);
    REQUIRE(miou(zeros, zeros) == 1.0); // foreground side is the both-empty case
    REQUIRE(dice(ones, ones) == 1.0);
    REQUIRE(dice(zeros, ones) == 0.0);
    REQUIRE(iou(zeros, ones, true) == 0.0);
    REQUIRE(iou(zeros, ones, false) == 0.0);
}

TEST_CASE("dice and foreground overlap obey their algebraic identity") {
    // dice = 2 iou / (1 + iou) whenever both are defined, including the
    // both-empty convention where each is 1.
    Rng rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::uint8_t> a(64), b(64);
        for (std::size_t i = 0; i < 64; ++i) {
            a[i] = static_cast<std::uint8_t>(rng.bounded(2));
            b[i] = static_cast<std::uint8_t>(rng.bounded(2));
        }
        const SegmentationMask ma = mask_of(a);
        const SegmentationMask mb = mask_of(b);
        const double i_fg = iou(ma, mb, true);
        REQUIRE_THAT(dice(ma, mb), WithinAbs(2.0 * i_fg / (1.0 + i_fg), 1e-12));
    }
}

TEST_CASE("masks must be binary and equally sized") {
    const SegmentationMask good = mask_of({0, 1});
    const SegmentationMask bad = mask_of({0, 2});
    const SegmentationMask longer = mask_of({0, 1, 1});
    REQUIRE_THROWS_AS(dice(good, bad), InvalidInputError);
    REQUIRE_THROWS_AS(miou(bad, good), InvalidInputError);
    REQUIRE_THROWS_AS(iou(good, longer, true), InvalidInputError);
}
