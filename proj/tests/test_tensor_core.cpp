#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "tnpoly/errors.hpp"
#include "tnpoly/tensor_core.hpp"

using namespace tnpoly;
using tnpoly::testing::random_tensor;

TEST_CASE("flatten and unflatten are inverse") {
    const Shape shape{3, 1, 4, 2};
    for (Index flat = 0; flat < shape_size(shape); ++flat) {
        const auto idx = unflatten_index(shape, flat);
        CHECK(flatten_index(shape, idx) == flat);
    }
    // last index fastest
    CHECK(flatten_index(shape, std::vector<Index>{0, 0, 0, 1}) == 1);
    CHECK(flatten_index(shape, std::vector<Index>{1, 0, 0, 0}) == 8);
    CHECK_THROWS_AS(flatten_index(shape, std::vector<Index>{3, 0, 0, 0}), ValidationError);
}

TEST_CASE("odometer visits every index once in row-major order") {
    const Shape shape{2, 3, 2};
    std::vector<Index> idx(3, 0);
    Index count = 0;
    do {
        CHECK(flatten_index(shape, idx) == count);
        ++count;
    } while (next_index(shape, idx));
    CHECK(count == 12);
}

TEST_CASE("constructors validate data length") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ValidationError);
    const Tensor s = Tensor::scalar(2.5);
    CHECK(s.rank() == 0);
    CHECK(s.size() == 1);
    CHECK(s[0] == 2.5);
}

TEST_CASE("matricize") {
    const Tensor t = random_tensor({2, 3, 4}, 1);
    SUBCASE("split 1 keeps the flat data") {
        const Tensor m = matricize(t, 1);
        CHECK(m.shape() == Shape{2, 12});
        CHECK(m.values() == t.values());
    }
    SUBCASE("split 3 gives a single column") {
        CHECK(matricize(t, 3).shape() == Shape{24, 1});
    }
    SUBCASE("round trip is bit exact") {
        CHECK(matricize(t, 2).reshaped(t.shape()) == t);
    }
    CHECK_THROWS_AS(matricize(t, 4), ValidationError);
    CHECK_THROWS_AS(matricize(t, -1), ValidationError);
}

TEST_CASE("permute against explicit index mapping") {
    const Tensor t = random_tensor({2, 3, 4}, 2);
    const std::vector<Index> perm{2, 0, 1};
    const Tensor p = permute(t, perm);
    REQUIRE(p.shape() == Shape{4, 2, 3});
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index k = 0; k < 4; ++k) CHECK(p({k, i, j}) == t({i, j, k}));
    CHECK_THROWS_AS(permute(t, std::vector<Index>{0, 0, 1}), ValidationError);
}

TEST_CASE("contract") {
    SUBCASE("identity times vector") {
        const Tensor eye({2, 2}, {1, 0, 0, 1});
        const Tensor v({2}, {3, 5});
        const Tensor out = contract(eye, v, {{1, 0}});
        CHECK(out.values() == std::vector<double>{3, 5});
    }
    SUBCASE("full contraction is a dot product") {
        const Tensor out = contract(Tensor({2}, {1, 2}), Tensor({2}, {3, 4}), {{0, 0}});
        CHECK(out.rank() == 0);
        CHECK(out[0] == 11.0);
    }
    SUBCASE("matrix product against a triple loop") {
        const Tensor a = random_tensor({3, 4}, 3);
        const Tensor b = random_tensor({4, 5}, 4);
        const Tensor c = contract(a, b, {{1, 0}});
        REQUIRE(c.shape() == Shape{3, 5});
        for (Index i = 0; i < 3; ++i)
            for (Index k = 0; k < 5; ++k) {
                double s = 0.0;
                for (Index j = 0; j < 4; ++j) s += a({i, j}) * b({j, k});
                CHECK(c({i, k}) == doctest::Approx(s).epsilon(1e-13));
            }
    }
    SUBCASE("two axes, output order follows unpaired axes") {
        const Tensor a = random_tensor({2, 3, 4}, 5);
        const Tensor b = random_tensor({4, 5, 2}, 6);
        const Tensor c = contract(a, b, {{0, 2}, {2, 0}});
        REQUIRE(c.shape() == Shape{3, 5});
        for (Index j = 0; j < 3; ++j)
            for (Index m = 0; m < 5; ++m) {
                double s = 0.0;
                for (Index i = 0; i < 2; ++i)
                    for (Index k = 0; k < 4; ++k) s += a({i, j, k}) * b({k, m, i});
                CHECK(c({j, m}) == doctest::Approx(s).epsilon(1e-13));
            }
    }
    SUBCASE("bilinear") {
        const Tensor a = random_tensor({3, 4}, 7), a2 = random_tensor({3, 4}, 8), b = random_tensor({4, 2}, 9);
        const Tensor lhs = contract(Tensor(2.0 * a + (-3.0) * a2), b, {{1, 0}});
        const Tensor rhs = 2.0 * contract(a, b, {{1, 0}}) + (-3.0) * contract(a2, b, {{1, 0}});
        CHECK(tnpoly::testing::max_abs_diff(lhs, rhs) < 1e-12);
    }
    SUBCASE("errors") {
        const Tensor a = random_tensor({3, 4}, 1), b = random_tensor({3, 4}, 2);
        CHECK_THROWS_AS(contract(a, b, {{1, 1}, {1, 0}}), ValidationError);
        CHECK_THROWS_AS(contract(a, b, {{1, 0}}), ValidationError);
    }
}

TEST_CASE("svd") {
    SUBCASE("identity") {
        const auto r = svd(Eigen::MatrixXd::Identity(3, 3));
        for (Index k = 0; k < 3; ++k) CHECK(r.singular_values(k) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("outer product of unit vectors has rank one") {
        Eigen::VectorXd u(3), v(4);
        u << 1, 2, 2;
        v << 1, 0, 0, 0;
        u /= 3.0;
        const auto r = svd(Eigen::MatrixXd(u * v.transpose()));
        CHECK(r.singular_values(0) == doctest::Approx(1.0).epsilon(1e-14));
        for (Index k = 1; k < r.size(); ++k) CHECK(std::abs(r.singular_values(k)) < 1e-15);
    }
    SUBCASE("random 5x3 reconstructs, sorted, orthonormal factors") {
        const Tensor m = random_tensor({5, 3}, 11);
        const auto r = svd(m);
        const Eigen::MatrixXd a = m.matrix();
        CHECK((r.reconstruct() - a).norm() / a.norm() < 1e-12);
        for (Index k = 1; k < r.size(); ++k) CHECK(r.singular_values(k) <= r.singular_values(k - 1));
        CHECK((r.left.transpose() * r.left - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
        CHECK((r.right * r.right.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    }
    SUBCASE("truncation error equals the discarded weight") {
        const Tensor m = random_tensor({6, 5}, 12);
        const auto r = svd(m);
        for (Index keep = 1; keep <= 5; ++keep) {
            const double err = (r.truncated(keep).reconstruct() - Eigen::MatrixXd(m.matrix())).norm();
            CHECK(std::abs(err - r.discarded_weight(keep)) < 1e-10);
        }
    }
    SUBCASE("non-finite input") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Ones(2, 2);
        m(0, 1) = std::nan("");
        CHECK_THROWS_AS(svd(m), NumericalError);
    }
}
