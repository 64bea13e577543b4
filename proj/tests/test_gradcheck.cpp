#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "drk/gradcheck.hpp"
#include "drk/gradcheck_suites.hpp"

using namespace drk;

TEST_CASE("fd_gradient recovers the gradient of simple functionals") {
    Tensor<double> x = Tensor<double>::from_values(Shape{2, 2}, {0.5, -1.25, 2.0, 0.1});

    SUBCASE("sum has unit gradient") {
        auto f = [](const Tensor<double>& t) { return static_cast<double>(t.data.sum()); };
        Tensor<double> g = fd_gradient(f, x);
        for (long i = 0; i < 4; ++i) CHECK(g.data[i] == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("half squared norm has gradient x") {
        auto f = [](const Tensor<double>& t) { return 0.5 * static_cast<double>((t.data * t.data).sum()); };
        Tensor<double> g = fd_gradient(f, x);
        for (long i = 0; i < 4; ++i) CHECK(g.data[i] == doctest::Approx(x.data[i]).epsilon(1e-9));
    }
    SUBCASE("rejects a nonpositive step") {
        auto f = [](const Tensor<double>& t) { return static_cast<double>(t.data.sum()); };
        CHECK_THROWS_AS(fd_gradient(f, x, 0.0), ValueError);
    }
    SUBCASE("propagates non-finite evaluations") {
        auto f = [](const Tensor<double>& t) { return std::log(t.data[1]); };  // negative at base point
        CHECK_THROWS_AS(fd_gradient(f, x), NumericError);
    }
}

TEST_CASE("check compares element-wise with a floored relative error") {
    Tensor<double> a = Tensor<double>::from_values(Shape{3}, {1.0, -2.0, 0.0});

    SUBCASE("identical tensors pass with zero error") {
        GradReport r = check(a, a, 1e-6);
        CHECK(r.passed);
        CHECK(r.max_rel_err == 0.0);
        CHECK(r.max_abs_err == 0.0);
        CHECK(r.n_checked == 3);
    }
    SUBCASE("a large deviation fails and is located") {
        Tensor<double> b = a;
        b.data[1] = -2.1;
        GradReport r = check(a, b, 1e-6, 1e-8);
        CHECK_FALSE(r.passed);
        CHECK(r.worst_index == 1);
        CHECK(r.max_abs_err == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(r.max_rel_err == doctest::Approx(0.1 / 2.1).epsilon(1e-10));
    }
    SUBCASE("tiny absolute deviations pass through the abs_tol escape") {
        Tensor<double> b = a;
        b.data[2] = 1e-9;  // relative error 1.0 against the floor, abs err 1e-9
        GradReport r = check(a, b, 1e-6, 1e-8);
        CHECK(r.passed);
    }
    SUBCASE("shape mismatch throws") {
        Tensor<double> b = Tensor<double>::zeros(Shape{4});
        CHECK_THROWS_AS(check(a, b, 1e-6), ShapeError);
    }
}

TEST_CASE("fold accumulates the worst case across reports") {
    GradReport total;
    GradReport r1;
    r1.max_rel_err = 1e-9;
    r1.max_abs_err = 1e-10;
    r1.worst_index = 3;
    r1.n_checked = 10;
    GradReport r2;
    r2.max_rel_err = 1e-7;
    r2.max_abs_err = 1e-12;
    r2.worst_index = 7;
    r2.n_checked = 5;
    r2.passed = false;
    fold(total, r1);
    fold(total, r2);
    CHECK(total.max_rel_err == 1e-7);
    CHECK(total.worst_index == 7);
    CHECK(total.max_abs_err == 1e-10);
    CHECK(total.n_checked == 15);
    CHECK_FALSE(total.passed);
}

TEST_CASE("the suite registry exposes every checked module") {
    std::vector<std::string> mods = gradcheck_modules();
    CHECK(mods.size() == 11);
    for (const char* name : {"conv2d", "bilinear", "deform", "se", "residual", "dynconv",
                             "enhance", "bce", "focal", "dice", "raf"})
        CHECK(std::find(mods.begin(), mods.end(), name) != mods.end());
    CHECK_THROWS_AS(run_gradcheck_suite("no_such_module", 0), ValueError);
}

TEST_CASE("a smooth suite passes end to end") {
    SuiteResult r = run_gradcheck_suite("conv2d", 1);
    CHECK(r.module == "conv2d");
    CHECK(r.report.passed);
    CHECK(r.report.max_rel_err <= r.rel_tol);
    CHECK(r.report.n_checked > 0);
}
