#include <cmath>

#include "doctest.h"
#include "drk/enhance.hpp"
#include "oracle_vectors.hpp"

using namespace drk;

namespace {

template <std::size_t N>
Tensor<double> wrap(const Shape& s, const double (&a)[N]) {
    std::vector<double> v(a, a + N);
    return Tensor<double>::from_values(s, v);
}

double max_abs_diff(const Tensor<double>& a, const double* ref, long n) {
    double m = 0;
    for (long i = 0; i < n; ++i) m = std::max(m, std::fabs(a.data[i] - ref[i]));
    return m;
}

DeformConvParams<double> oracle_deform() {
    DeformConvParams<double> p;
    p.main.weight = wrap(Shape{3, 2, 3, 3}, oracle::conv_w);
    p.main.bias = wrap(Shape{3}, oracle::conv_b);
    p.main.stride = 1;
    p.main.padding = 1;
    p.offset_branch.weight = Tensor<double>::zeros(Shape{18, 2, 3, 3});
    p.offset_branch.bias = wrap(Shape{18}, oracle::deform_off_bias);
    p.offset_branch.stride = 1;
    p.offset_branch.padding = 1;
    return p;
}

}  // namespace

TEST_CASE("deformable conv matches the reference under constant offsets") {
    // A zero-weight offset branch with fixed bias produces the same offset
    // at every spatial position, which the reference computed directly.
    Tensor<double> x = wrap(Shape{1, 2, 4, 5}, oracle::conv_x);
    DeformConvOut<double> out = deform_conv_fwd(x, oracle_deform());
    REQUIRE(out.y.shape == Shape{1, 3, 4, 5});
    CHECK(max_abs_diff(out.y, oracle::deform_y, out.y.numel()) <= 1e-13);
    REQUIRE(out.offsets.shape == Shape{1, 18, 4, 5});
    CHECK(out.offsets.at4(0, 4, 2, 3) == doctest::Approx(oracle::deform_off_bias[4]).epsilon(1e-15));
}

TEST_CASE("deformable conv with zero offsets equals plain conv bitwise") {
    Rng rng(7);
    Tensor<double> x = Tensor<double>::zeros(Shape{2, 3, 6, 7});
    for (long i = 0; i < x.numel(); ++i) x.data[i] = rng.uniform(-1, 1);

    DeformConvParams<double> p;
    p.main.weight = kaiming_init<double>(rng, Shape{4, 3, 3, 3}, 27);
    p.main.bias = Tensor<double>::zeros(Shape{4});
    for (long i = 0; i < 4; ++i) p.main.bias.data[i] = rng.uniform(-0.5, 0.5);
    p.main.stride = 1;
    p.main.padding = 1;
    p.offset_branch.weight = Tensor<double>::zeros(Shape{18, 3, 3, 3});
    p.offset_branch.bias = Tensor<double>::zeros(Shape{18});
    p.offset_branch.stride = 1;
    p.offset_branch.padding = 1;

    Tensor<double> plain = conv2d_fwd(x, p.main);
    DeformConvOut<double> d = deform_conv_fwd(x, p);
    for (long i = 0; i < plain.numel(); ++i) CHECK(d.y.data[i] == plain.data[i]);
}

TEST_CASE("squeeze-excitation matches the reference vectors") {
    Tensor<double> x = wrap(Shape{2, 3, 2, 2}, oracle::se_x);
    SeParams<double> p;
    p.fc1.weight = wrap(Shape{2, 3}, oracle::se_fc1_w);
    p.fc1.bias = wrap(Shape{2}, oracle::se_fc1_b);
    p.fc2.weight = wrap(Shape{3, 2}, oracle::se_fc2_w);
    p.fc2.bias = wrap(Shape{3}, oracle::se_fc2_b);
    p.reduction = 2;

    SeOut<double> out = se_fwd(x, p);
    CHECK(max_abs_diff(out.s, oracle::se_s, out.s.numel()) <= 1e-14);
    CHECK(max_abs_diff(out.x_sc, oracle::se_y, out.x_sc.numel()) <= 1e-13);
}

TEST_CASE("squeeze-excitation gate degenerate cases") {
    Tensor<double> x = Tensor<double>::from_values(Shape{1, 2, 1, 2}, {1, 3, -2, 6});
    SeParams<double> p;
    p.fc1.weight = Tensor<double>::zeros(Shape{1, 2});
    p.fc1.bias = Tensor<double>::zeros(Shape{1});
    p.fc2.weight = Tensor<double>::zeros(Shape{2, 1});
    p.fc2.bias = Tensor<double>::zeros(Shape{2});
    p.reduction = 2;

    SUBCASE("all-zero parameters gate at exactly one half") {
        SeOut<double> out = se_fwd(x, p);
        CHECK(out.s.data[0] == 0.5);
        CHECK(out.s.data[1] == 0.5);
        CHECK(out.x_sc.data[1] == 1.5);
        CHECK(out.x_sc.data[2] == -1.0);
    }
    SUBCASE("large positive gate bias saturates toward one") {
        p.fc2.bias.data[0] = 40.0;
        p.fc2.bias.data[1] = 40.0;
        SeOut<double> out = se_fwd(x, p);
        CHECK(out.s.data[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(out.x_sc.data[3] == doctest::Approx(6.0).epsilon(1e-14));
    }
}

TEST_CASE("se hidden dim rounds up") {
    CHECK(se_hidden_dim(8, 4) == 2);
    CHECK(se_hidden_dim(8, 16) == 1);
    CHECK(se_hidden_dim(9, 4) == 3);
    CHECK(se_hidden_dim(1, 16) == 1);
}

TEST_CASE("residual fusion with a zero shortcut is the identity on x_se") {
    Tensor<double> x = Tensor<double>::from_values(Shape{1, 2, 1, 2}, {1, 2, 3, 4});
    Tensor<double> xse = Tensor<double>::from_values(Shape{1, 2, 1, 2}, {5, 6, 7, 8});
    ResidualParams<double> p;
    p.shortcut.weight = Tensor<double>::zeros(Shape{2, 2, 1, 1});
    p.shortcut.bias = Tensor<double>::zeros(Shape{2});
    p.shortcut.stride = 1;
    p.shortcut.padding = 0;
    p.factor = 1;
    Tensor<double> out = residual_fuse(x, xse, p);
    for (long i = 0; i < 4; ++i) CHECK(out.data[i] == xse.data[i]);
}

TEST_CASE("residual fusion adds the upsampled shortcut path") {
    // identity 1x1 shortcut on a single channel: out = x_se + U(x)
    Tensor<double> x = Tensor<double>::from_values(Shape{1, 1, 1, 1}, {2.0});
    Tensor<double> xse = Tensor<double>::zeros(Shape{1, 1, 2, 2});
    ResidualParams<double> p;
    p.shortcut.weight = Tensor<double>::from_values(Shape{1, 1, 1, 1}, {1.0});
    p.shortcut.bias = Tensor<double>::from_values(Shape{1}, {0.5});
    p.shortcut.stride = 1;
    p.shortcut.padding = 0;
    p.factor = 2;
    Tensor<double> out = residual_fuse(x, xse, p);
    REQUIRE(out.shape == Shape{1, 1, 2, 2});
    for (long i = 0; i < 4; ++i) CHECK(out.data[i] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("dynamic conv with identity generator bias is a pass-through") {
    const long C = 3, D = 4;
    DynConvParams<double> p;
    p.kernel_gen.weight = Tensor<double>::zeros(Shape{C * (C + 1), D});
    p.kernel_gen.bias = Tensor<double>::zeros(Shape{C * (C + 1)});
    for (long o = 0; o < C; ++o) p.kernel_gen.bias.data[o * C + o] = 1.0;

    Rng rng(3);
    Tensor<double> x = Tensor<double>::zeros(Shape{2, C, 3, 2});
    for (long i = 0; i < x.numel(); ++i) x.data[i] = rng.uniform(-2, 2);
    Tensor<double> emb = Tensor<double>::zeros(Shape{2, D});
    for (long i = 0; i < emb.numel(); ++i) emb.data[i] = rng.uniform(-1, 1);

    Tensor<double> y = dyn_conv_apply(x, emb, p);
    for (long i = 0; i < x.numel(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-15));
}

TEST_CASE("dynamic conv applies per-sample kernels") {
    // one input channel, one output channel: kernel = w.emb + b, bias row too
    DynConvParams<double> p;
    p.kernel_gen.weight = Tensor<double>::from_values(Shape{2, 1}, {2.0, 1.0});  // kernel row, bias row
    p.kernel_gen.bias = Tensor<double>::from_values(Shape{2}, {0.0, 0.5});
    Tensor<double> x = Tensor<double>::from_values(Shape{2, 1, 1, 1}, {1.0, 1.0});
    Tensor<double> emb = Tensor<double>::from_values(Shape{2, 1}, {1.0, -1.0});
    Tensor<double> y = dyn_conv_apply(x, emb, p);
    // sample 0: kernel 2*1=2, bias 1*1+0.5=1.5 -> 3.5; sample 1: kernel -2, bias -0.5 -> -2.5
    CHECK(y.data[0] == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(y.data[1] == doctest::Approx(-2.5).epsilon(1e-15));
}

TEST_CASE("dynamic conv rejects a generator that does not tile") {
    DynConvParams<double> p;
    p.kernel_gen.weight = Tensor<double>::zeros(Shape{5, 2});  // 5 not divisible by C_in+1 = 3
    p.kernel_gen.bias = Tensor<double>::zeros(Shape{5});
    Tensor<double> x = Tensor<double>::zeros(Shape{1, 2, 2, 2});
    Tensor<double> emb = Tensor<double>::zeros(Shape{1, 2});
    CHECK_THROWS_AS(dyn_conv_apply(x, emb, p), ShapeError);
}

TEST_CASE("enhance block composes deform, se and the residual shortcut") {
    // zero offsets, gate forced to ~1, zero shortcut: block == main conv of
    // the upsampled input (up to the gate saturation tolerance)
    Rng rng(5);
    Tensor<double> x = Tensor<double>::zeros(Shape{1, 2, 3, 3});
    for (long i = 0; i < x.numel(); ++i) x.data[i] = rng.uniform(-1, 1);

    EnhanceParams<double> p;
    p.deform.main.weight = kaiming_init<double>(rng, Shape{2, 2, 3, 3}, 18);
    p.deform.main.bias = Tensor<double>::zeros(Shape{2});
    p.deform.main.stride = 1;
    p.deform.main.padding = 1;
    p.deform.offset_branch.weight = Tensor<double>::zeros(Shape{18, 2, 3, 3});
    p.deform.offset_branch.bias = Tensor<double>::zeros(Shape{18});
    p.deform.offset_branch.stride = 1;
    p.deform.offset_branch.padding = 1;
    p.se.fc1.weight = Tensor<double>::zeros(Shape{1, 2});
    p.se.fc1.bias = Tensor<double>::zeros(Shape{1});
    p.se.fc2.weight = Tensor<double>::zeros(Shape{2, 1});
    p.se.fc2.bias = Tensor<double>::full(Shape{2}, 50.0);
    p.se.reduction = 2;
    p.residual.shortcut.weight = Tensor<double>::zeros(Shape{2, 2, 1, 1});
    p.residual.shortcut.bias = Tensor<double>::zeros(Shape{2});
    p.residual.shortcut.stride = 1;
    p.residual.shortcut.padding = 0;
    p.residual.factor = 2;

    Tensor<double> out = enhance_block_fwd(x, p);
    Tensor<double> ref = conv2d_fwd(upsample_bilinear(x, 2), p.deform.main);
    REQUIRE(out.shape == ref.shape);
    for (long i = 0; i < out.numel(); ++i) CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
}
