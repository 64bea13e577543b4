#include <array>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "drk/pgm.hpp"
#include "drk/toy_data.hpp"

using namespace drk;

namespace {

DatasetSpec small_spec() {
    DatasetSpec sp;
    sp.n_samples = 24;
    sp.image_size = 32;
    sp.seed = 11;
    return sp;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
    DatasetSpec sp = small_spec();
    std::vector<ToySample> a = generate(sp);
    std::vector<ToySample> b = generate(sp);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sample_id == b[i].sample_id);
        CHECK(a[i].mask == b[i].mask);
        REQUIRE(a[i].image.numel() == b[i].image.numel());
        for (long j = 0; j < a[i].image.numel(); ++j) CHECK(a[i].image.data[j] == b[i].image.data[j]);
        for (long j = 0; j < kAttrDim; ++j) CHECK(a[i].attr.data[j] == b[i].attr.data[j]);
    }

    sp.seed = 12;
    std::vector<ToySample> c = generate(sp);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i) any_diff = !(a[i].mask == c[i].mask);
    CHECK(any_diff);
}

TEST_CASE("scene shapes carry unique attribute tuples and the mask is the referent") {
    DatasetSpec sp = small_spec();
    std::vector<Scene> scenes;
    std::vector<ToySample> samples = generate(sp, &scenes);
    REQUIRE(scenes.size() == samples.size());

    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const Scene& sc = scenes[i];
        REQUIRE(sc.shapes.size() >= 2);  // referent plus at least one distractor
        REQUIRE(sc.shapes.size() <= 5);
        std::set<std::array<int, 4>> tuples;
        for (const SceneShape& sh : sc.shapes) tuples.insert({sh.kind, sh.color, sh.size, sh.quad});
        CHECK(tuples.size() == sc.shapes.size());

        Mask ref = rasterize_shape(sc.shapes[static_cast<std::size_t>(sc.referent)], sp.image_size, sp.image_size);
        CHECK(ref == samples[i].mask);
    }
}

TEST_CASE("attribute vectors are one-hot per block and match the referent") {
    DatasetSpec sp = small_spec();
    std::vector<Scene> scenes;
    std::vector<ToySample> samples = generate(sp, &scenes);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SceneShape& ref = scenes[i].shapes[static_cast<std::size_t>(scenes[i].referent)];
        const Tensor<float>& a = samples[i].attr;
        REQUIRE(a.shape == Shape{kAttrDim});
        for (long j = 0; j < kAttrDim; ++j) CHECK((a.data[j] == 0.0f || a.data[j] == 1.0f));
        CHECK(a.data[ref.kind] == 1.0f);
        CHECK(a.data[kShapeKinds + ref.color] == 1.0f);
        CHECK(a.data[kShapeKinds + kColorCount + ref.size] == 1.0f);
        CHECK(a.data[kShapeKinds + kColorCount + kSizeBuckets + ref.quad] == 1.0f);
        CHECK(a.data.sum() == 4.0f);
    }
}

TEST_CASE("mask area stays inside the configured fraction bounds") {
    DatasetSpec sp = small_spec();
    std::vector<ToySample> samples = generate(sp);
    const double px = static_cast<double>(sp.image_size * sp.image_size);
    for (const ToySample& s : samples) {
        long on = 0;
        for (std::uint8_t v : s.mask.data) on += v;
        const double frac = static_cast<double>(on) / px;
        CHECK(frac >= sp.frac_lo);
        CHECK(frac <= sp.frac_hi);
    }
}

TEST_CASE("referent pixels carry its palette color") {
    DatasetSpec sp = small_spec();
    std::vector<Scene> scenes;
    std::vector<ToySample> samples = generate(sp, &scenes);
    const long hw = sp.image_size * sp.image_size;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SceneShape& ref = scenes[i].shapes[static_cast<std::size_t>(scenes[i].referent)];
        const ToySample& s = samples[i];
        for (long p = 0; p < hw; ++p) {
            if (!s.mask.data[static_cast<std::size_t>(p)]) continue;
            for (int c = 0; c < 3; ++c) {
                const double painted = kPalette[ref.color][c] * ref.jitter;
                const double got = static_cast<double>(s.image.data[c * hw + p]);
                CHECK(std::fabs(got - std::clamp(painted, 0.0, 1.0)) <= 0.021);  // additive noise band
            }
        }
    }
}

TEST_CASE("sample ids are zero-padded and sequential") {
    DatasetSpec sp = small_spec();
    sp.n_samples = 3;
    std::vector<ToySample> samples = generate(sp);
    CHECK(samples[0].sample_id == "s000000");
    CHECK(samples[1].sample_id == "s000001");
    CHECK(samples[2].sample_id == "s000002");
}

TEST_CASE("spec validation") {
    DatasetSpec sp;
    SUBCASE("zero samples") { sp.n_samples = 0; }
    SUBCASE("tiny image") { sp.image_size = 8; }
    SUBCASE("no distractors") { sp.min_distractors = 0; }
    SUBCASE("inverted distractor range") { sp.min_distractors = 3; sp.max_distractors = 2; }
    SUBCASE("bad fractions") { sp.frac_lo = 0.3; sp.frac_hi = 0.2; }
    CHECK_THROWS_AS(generate(sp), ValueError);
}

TEST_CASE("pgm masks round-trip bit-identically") {
    DatasetSpec sp = small_spec();
    sp.n_samples = 2;
    std::vector<ToySample> samples = generate(sp);
    const std::string path = "/tmp/drk_test_mask.pgm";
    save_mask_pgm(path, samples[0].mask);
    Mask back = load_mask_pgm(path);
    CHECK(back == samples[0].mask);
    std::filesystem::remove(path);
}

TEST_CASE("datasets round-trip through the directory format") {
    DatasetSpec sp = small_spec();
    sp.n_samples = 4;
    std::vector<ToySample> samples = generate(sp);
    const std::string dir = "/tmp/drk_test_toydata";
    std::filesystem::remove_all(dir);
    save_dataset(dir, samples);
    std::vector<ToySample> back = load_dataset(dir);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].sample_id == samples[i].sample_id);
        CHECK(back[i].mask == samples[i].mask);
        for (long j = 0; j < samples[i].image.numel(); ++j) CHECK(back[i].image.data[j] == samples[i].image.data[j]);
        for (long j = 0; j < kAttrDim; ++j) CHECK(back[i].attr.data[j] == samples[i].attr.data[j]);
    }
    std::filesystem::remove_all(dir);
}
