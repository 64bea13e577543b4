#include <cmath>

#include "doctest.h"
#include "drk/layers.hpp"
#include "drk/optim.hpp"
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

}  // namespace

TEST_CASE("conv2d matches the reference vectors") {
    Tensor<double> x = wrap(Shape{1, 2, 4, 5}, oracle::conv_x);
    Conv2dParams<double> p;
    p.weight = wrap(Shape{3, 2, 3, 3}, oracle::conv_w);
    p.bias = wrap(Shape{3}, oracle::conv_b);

    SUBCASE("stride 1 padding 1") {
        p.stride = 1;
        p.padding = 1;
        Tensor<double> y = conv2d_fwd(x, p);
        REQUIRE(y.shape == Shape{1, 3, 4, 5});
        CHECK(max_abs_diff(y, oracle::conv_y_s1p1, y.numel()) <= 1e-13);
    }
    SUBCASE("stride 2 padding 0") {
        p.stride = 2;
        p.padding = 0;
        Tensor<double> y = conv2d_fwd(x, p);
        REQUIRE(y.shape == Shape{1, 3, 1, 2});
        CHECK(max_abs_diff(y, oracle::conv_y_s2p0, y.numel()) <= 1e-13);
    }
    SUBCASE("channel mismatch throws") {
        Tensor<double> bad = Tensor<double>::zeros(Shape{1, 3, 4, 5});
        p.stride = 1;
        p.padding = 1;
        CHECK_THROWS_AS(conv2d_fwd(bad, p), ShapeError);
    }
}

TEST_CASE("bilinear upsample matches the reference vectors") {
    Tensor<double> x = wrap(Shape{1, 2, 3, 4}, oracle::up_x);
    Tensor<double> y = upsample_bilinear(x, 2);
    REQUIRE(y.shape == Shape{1, 2, 6, 8});
    CHECK(max_abs_diff(y, oracle::up_y, y.numel()) <= 1e-13);
}

TEST_CASE("upsample factor 1 is the identity") {
    Tensor<double> x = wrap(Shape{1, 2, 3, 4}, oracle::up_x);
    Tensor<double> y = upsample_bilinear(x, 1);
    for (long i = 0; i < x.numel(); ++i) CHECK(y.data[i] == x.data[i]);
}

TEST_CASE("upsample backward is the transpose of forward") {
    // <U(x), g> == <x, U^T(g)> for every pair, which pins the backward
    // weights without trusting the forward twice.
    Rng rng(11);
    Tensor<double> x = Tensor<double>::zeros(Shape{2, 3, 4, 3});
    Tensor<double> g = Tensor<double>::zeros(Shape{2, 3, 8, 6});
    for (long i = 0; i < x.numel(); ++i) x.data[i] = rng.uniform(-1, 1);
    for (long i = 0; i < g.numel(); ++i) g.data[i] = rng.uniform(-1, 1);
    Tensor<double> y = upsample_bilinear(x, 2);
    Tensor<double> xt = upsample_bilinear_bwd(g, 4, 3, 2);
    double lhs = 0, rhs = 0;
    for (long i = 0; i < y.numel(); ++i) lhs += y.data[i] * g.data[i];
    for (long i = 0; i < x.numel(); ++i) rhs += x.data[i] * xt.data[i];
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(lhs)));
}

TEST_CASE("relu and sigmoid behave at the kinks and tails") {
    Tensor<double> x = Tensor<double>::from_values(Shape{5}, {-2, -0.0, 0.0, 3, 800});
    Tensor<double> r = relu(x);
    CHECK(r.data[0] == 0.0);
    CHECK(r.data[1] == 0.0);
    CHECK(r.data[2] == 0.0);
    CHECK(r.data[3] == 3.0);

    Tensor<double> s = sigmoid(x);
    CHECK(s.data[4] == 1.0);  // saturates cleanly, no NaN from exp overflow
    CHECK(s.data[2] == 0.5);
    Tensor<double> neg = Tensor<double>::from_values(Shape{1}, {-800.0});
    CHECK(sigmoid(neg).data[0] >= 0.0);
    CHECK(sigmoid(neg).data[0] < 1e-300);
}

TEST_CASE("adam matches the reference trajectory") {
    Tensor<double> theta = wrap(Shape{4}, oracle::adam_theta0);
    Tensor<double> g = wrap(Shape{4}, oracle::adam_g);
    std::vector<NamedParam> params{{"theta", &theta}};
    OptimState st = make_optim_state(params, 1e-3, {}, 0.1, 0.0);
    st.lr = 1e-3;

    adam_step(params, {g}, st);
    CHECK(max_abs_diff(theta, oracle::adam_after1, 4) <= 1e-15);

    adam_step(params, {g}, st);
    adam_step(params, {g}, st);
    CHECK(max_abs_diff(theta, oracle::adam_after3, 4) <= 1e-15);
}

TEST_CASE("adam first step moves by lr for unit gradient") {
    Tensor<double> theta = Tensor<double>::from_values(Shape{2}, {0.0, 10.0});
    Tensor<double> g = Tensor<double>::from_values(Shape{2}, {1.0, 1.0});
    std::vector<NamedParam> params{{"t", &theta}};
    OptimState st = make_optim_state(params, 1e-4, {}, 0.1, 0.0);
    st.lr = 1e-4;
    adam_step(params, {g}, st);
    const double expect = 1e-4 * 1.0 / (1.0 + 1e-8);
    CHECK(std::fabs((0.0 - theta.data[0]) - expect) <= 1e-18);
    CHECK(std::fabs((10.0 - theta.data[1]) - expect) <= 1e-12);
}

TEST_CASE("adam with zero gradient is a no-op") {
    Tensor<double> theta = Tensor<double>::from_values(Shape{3}, {1, -2, 0.5});
    Tensor<double> g = Tensor<double>::zeros(Shape{3});
    std::vector<NamedParam> params{{"t", &theta}};
    OptimState st = make_optim_state(params, 1e-2, {}, 0.1, 0.0);
    st.lr = 1e-2;
    adam_step(params, {g}, st);
    CHECK(theta.data[0] == 1.0);
    CHECK(theta.data[1] == -2.0);
    CHECK(theta.data[2] == 0.5);
}

TEST_CASE("lr schedule steps down at each milestone") {
    Tensor<double> dummy = Tensor<double>::zeros(Shape{1});
    std::vector<NamedParam> params{{"d", &dummy}};
    OptimState st = make_optim_state(params, 1e-4, {15, 30}, 0.1, 0.0);
    CHECK(lr_at(0, st) == 1e-4);
    CHECK(lr_at(14, st) == 1e-4);
    CHECK(lr_at(15, st) == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(lr_at(29, st) == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(lr_at(30, st) == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(lr_at(50, st) == doctest::Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("gradient clipping scales to the global norm bound") {
    std::vector<Tensor<double>> grads;
    grads.push_back(Tensor<double>::from_values(Shape{2}, {3.0, 0.0}));
    grads.push_back(Tensor<double>::from_values(Shape{1}, {4.0}));
    // global norm 5
    double pre = clip_grads(grads, 1.0);
    CHECK(pre == doctest::Approx(5.0).epsilon(1e-15));
    double post = std::sqrt(grads[0].data[0] * grads[0].data[0] + grads[1].data[0] * grads[1].data[0]);
    CHECK(post <= 1.0 + 1e-9);
    CHECK(grads[0].data[0] == doctest::Approx(0.6).epsilon(1e-12));

    // below the bound nothing changes
    std::vector<Tensor<double>> small;
    small.push_back(Tensor<double>::from_values(Shape{1}, {0.3}));
    clip_grads(small, 1.0);
    CHECK(small[0].data[0] == 0.3);

    // 0 disables clipping entirely
    std::vector<Tensor<double>> big;
    big.push_back(Tensor<double>::from_values(Shape{1}, {1e9}));
    double n = clip_grads(big, 0.0);
    CHECK(n == 1e9);
    CHECK(big[0].data[0] == 1e9);
}

TEST_CASE("kaiming init has the right variance") {
    Rng rng(123);
    Tensor<double> w = kaiming_init<double>(rng, Shape{64, 8, 2, 4}, 8);
    REQUIRE(w.numel() == 4096);
    double mean = 0;
    for (long i = 0; i < w.numel(); ++i) mean += w.data[i];
    mean /= static_cast<double>(w.numel());
    double var = 0;
    for (long i = 0; i < w.numel(); ++i) var += (w.data[i] - mean) * (w.data[i] - mean);
    var /= static_cast<double>(w.numel());
    // target variance 2 / fan_in = 0.25
    CHECK(var > 0.225);
    CHECK(var < 0.275);
}

TEST_CASE("linear layer forward and backward shapes") {
    LinearParams<double> p;
    p.weight = Tensor<double>::from_values(Shape{2, 3}, {1, 0, -1, 0.5, 0.5, 0.5});
    p.bias = Tensor<double>::from_values(Shape{2}, {0.0, 1.0});
    Tensor<double> x = Tensor<double>::from_values(Shape{1, 3}, {2, 3, 4});
    Tensor<double> y = linear_fwd(x, p);
    CHECK(y.data[0] == doctest::Approx(-2.0));
    CHECK(y.data[1] == doctest::Approx(5.5));

    Tensor<double> g = Tensor<double>::from_values(Shape{1, 2}, {1.0, 0.0});
    LinearGrads<double> lg = linear_bwd(x, p, g);
    CHECK(lg.x.data[0] == doctest::Approx(1.0));
    CHECK(lg.x.data[2] == doctest::Approx(-1.0));
    CHECK(lg.weight.data[0] == doctest::Approx(2.0));
    CHECK(lg.bias.data[0] == doctest::Approx(1.0));
}
