#include "doctest.h"

#include <cmath>

#include <Eigen/QR>

#include "test_support.hpp"
#include "tnpoly/errors.hpp"
#include "tnpoly/problem_space.hpp"
#include "tnpoly/tensor_train.hpp"

using namespace tnpoly;
using tnpoly::testing::naive_tt_dense;
using tnpoly::testing::random_tensor;

namespace {

Tensor outer(const std::vector<std::vector<double>>& factors) {
    Shape shape;
    for (const auto& f : factors) shape.push_back(static_cast<Index>(f.size()));
    Tensor t(shape);
    for (Index flat = 0; flat < t.size(); ++flat) {
        const auto idx = unflatten_index(shape, flat);
        double v = 1.0;
        for (std::size_t k = 0; k < factors.size(); ++k) v *= factors[k][static_cast<std::size_t>(idx[k])];
        t[flat] = v;
    }
    return t;
}

// Inserts an identity factored as A * A^-1 on every interior bond, doubling its rank.
TTState inflate(const TTState& tt, std::uint64_t seed) {
    TTState out = tt;
    out.canonical_center.reset();
    Rng rng(seed);
    for (std::size_t k = 0; k + 1 < out.cores.size(); ++k) {
        const Index r = out.cores[k].extent(2);
        Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(r, 2 * r, [&] { return rng.normal(); });
        const Eigen::MatrixXd pinv = a.completeOrthogonalDecomposition().pseudoInverse();  // a * pinv = I
        Tensor& left = out.cores[k];
        Tensor& right = out.cores[k + 1];
        const Index rl = left.extent(0), dl = left.extent(1), dr = right.extent(1), rr = right.extent(2);
        const Eigen::MatrixXd lm = left.reshaped({rl * dl, r}).matrix() * a;
        const Eigen::MatrixXd rm = pinv * right.reshaped({r, dr * rr}).matrix();
        left = Tensor::from_matrix(lm).reshaped({rl, dl, 2 * r});
        right = Tensor::from_matrix(rm).reshaped({2 * r, dr, rr});
    }
    return out;
}

}  // namespace

TEST_CASE("decompose and reconstruct") {
    SUBCASE("rank-one tensor has unit bonds") {
        const Tensor t = outer({{1, 2, 0.5}, {0.5, -1, 3}, {2, 1, -1}, {1, 1, 1}});
        const TTState tt = tt_decompose(t);
        for (Index r : tt.ranks()) CHECK(r == 1);
        CHECK(relative_error(tt_reconstruct(tt), t) < 1e-12);
    }
    SUBCASE("random untruncated round trip") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Tensor t = random_tensor({3, 3, 3, 3}, seed);
            const TTState tt = tt_decompose(t);
            CHECK(relative_error(tt_reconstruct(tt), t) < 1e-10);
            CHECK(relative_error(naive_tt_dense(tt.cores), t) < 1e-10);
            CHECK(tt.ranks() == std::vector<Index>{1, 3, 9, 3, 1});
            CHECK(is_canonical(tt));
        }
    }
    SUBCASE("Bell pair") {
        const double r = 1.0 / std::sqrt(2.0);
        const TTState tt = tt_decompose(Tensor({2, 2}, {r, 0, 0, r}));
        CHECK(tt.ranks() == std::vector<Index>{1, 2, 1});
        const auto s = tt_schmidt_values(tt);
        REQUIRE(s.size() == 1);
        CHECK(s[0](0) == doctest::Approx(r).epsilon(1e-14));
        CHECK(s[0](1) == doctest::Approx(r).epsilon(1e-14));
    }
    SUBCASE("truncation error equals the discarded weight") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Tensor t = random_tensor({3, 3, 3, 3, 3}, seed);
            for (Index rank : {1, 2, 3}) {
                const auto [tt, report] = tt_decompose_reported(t, rank);
                CHECK(tt.max_rank() <= rank);
                const double err = (tt_reconstruct(tt) - t).norm();
                CHECK(std::abs(err - report.total()) < 1e-9);
            }
        }
    }
    SUBCASE("relative tolerance per bond") {
        // one dominant and one tiny Schmidt value
        const Tensor t({2, 2}, {1.0, 0.0, 0.0, 1e-6});
        CHECK(tt_decompose(t, kUnboundedRank, 1e-3).ranks() == std::vector<Index>{1, 1, 1});
        CHECK(tt_decompose(t, kUnboundedRank, 1e-9).ranks() == std::vector<Index>{1, 2, 1});
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(tt_decompose(Tensor({2, 3})), ValidationError);
    }
}

TEST_CASE("contraction with history vectors") {
    SUBCASE("constant polynomial") {
        TTState tt;
        for (int k = 0; k < 3; ++k) {
            Tensor c({1, 3, 1});
            c({0, 0, 0}) = 1.0;
            tt.cores.push_back(c);
        }
        ColVector<double> s(3);
        s << 1.0, 0.3, -2.0;
        CHECK(tt_contract_history(tt, s) == 1.0);
    }
    SUBCASE("random TT against dense evaluation") {
        Rng rng(3);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const TTState tt = random_tt(5, 4, 3, seed);
            const CoeffTensor dense({3, 5, Representation::Original}, naive_tt_dense(tt.cores));
            for (int trial = 0; trial < 20; ++trial) {
                const auto h = tnpoly::testing::random_inputs(3, rng);
                const double ref = tnpoly::testing::naive_evaluate_original(dense.tensor(), h);
                CHECK(tt_contract_history(tt, history_vector(h)) == doctest::Approx(ref).epsilon(1e-10));
            }
        }
    }
    SUBCASE("multilinear in each core") {
        const TTState tt = random_tt(4, 3, 2, 9);
        TTState scaled = tt;
        scaled.cores[2] *= 3.0;
        scaled.canonical_center.reset();
        ColVector<double> s(3);
        s << 1.0, 0.4, -0.7;
        CHECK(tt_contract_history(scaled, s) == doctest::Approx(3.0 * tt_contract_history(tt, s)).epsilon(1e-13));
    }
    SUBCASE("dimension mismatch") {
        ColVector<double> s(2);
        s << 1.0, 0.5;
        CHECK_THROWS_AS(tt_contract_history(random_tt(3, 3, 2, 1), s), ValidationError);
    }
}

TEST_CASE("parameter counts") {
    CHECK(tt_parameter_bound(4, 3, 2) == 60);
    const TTState tt = random_tt(3, 5, 2, 1);
    CHECK(tt_parameter_count(tt) == 40);
    CHECK(tt_parameter_count(random_tt(3, 2, 1, 1)) == 6);
    Index sum = 0;
    for (const Tensor& c : tt.cores) sum += c.size();
    CHECK(tt_parameter_count(tt) == sum);
}

TEST_CASE("norm, scaling and canonical form") {
    const TTState tt = random_tt(5, 3, 3, 4);
    CHECK(tt_norm(tt) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tt_norm(tt_scaled(tt, -2.5)) == doctest::Approx(2.5).epsilon(1e-12));
    const Tensor dense = tt_reconstruct(tt);
    CHECK(relative_error(tt_reconstruct(tt_scaled(tt, -2.5)), Tensor(-2.5 * dense)) < 1e-12);

    for (Index c = 0; c < 5; ++c) {
        const TTState can = tt_canonicalize(tt, c);
        CHECK(is_canonical(can));
        CHECK(relative_error(tt_reconstruct(can), dense) < 1e-12);
        const TTState s = tt_scaled(can, 0.5);
        CHECK(is_canonical(s));
        CHECK(tt_norm(s) == doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK_FALSE(is_canonical(tt));
}

TEST_CASE("rounding") {
    SUBCASE("inflated ranks come back") {
        const TTState tt = random_tt(5, 3, 2, 5);
        const TTState big = inflate(tt, 6);
        CHECK(big.max_rank() == 4);
        CHECK(relative_error(tt_reconstruct(big), tt_reconstruct(tt)) < 1e-10);
        const auto [rounded, report] = tt_round_reported(big);
        CHECK(rounded.ranks() == tt.ranks());
        CHECK(relative_error(tt_reconstruct(rounded), tt_reconstruct(tt)) < 1e-10);
        CHECK(report.total() < 1e-10);
    }
    SUBCASE("minimal TT is unchanged up to gauge") {
        const TTState tt = random_tt(4, 3, 3, 7);
        CHECK(relative_error(tt_reconstruct(tt_round(tt)), tt_reconstruct(tt)) < 1e-12);
    }
    SUBCASE("rank one on a product state is exact") {
        const Tensor t = outer({{1, 2}, {3, 1}, {0.5, 0.5}});
        const TTState tt = tt_decompose(t);
        CHECK(relative_error(tt_reconstruct(tt_round(tt, 1)), t) < 1e-12);
    }
    SUBCASE("error equals the discarded weight") {
        const TTState tt = tt_decompose(random_tensor({3, 3, 3, 3, 3}, 8));
        const auto [rounded, report] = tt_round_reported(tt, 2);
        CHECK(rounded.max_rank() <= 2);
        CHECK(std::abs((tt_reconstruct(rounded) - tt_reconstruct(tt)).norm() - report.total()) < 1e-9);
    }
}

TEST_CASE("fixtures are seeded") {
    const TTState a = random_tt(4, 2, 2, 11), b = random_tt(4, 2, 2, 11), c = random_tt(4, 2, 2, 12);
    CHECK(a.cores[1] == b.cores[1]);
    CHECK_FALSE(a.cores[1] == c.cores[1]);
    CHECK(random_dense_state(4, 2, 3).coefficients == random_dense_state(4, 2, 3).coefficients);
    CHECK(std::abs(random_dense_state(6, 3, 3).coefficients.norm() - 1.0) < 1e-12);
}
