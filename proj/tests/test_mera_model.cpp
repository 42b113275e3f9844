#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "tnpoly/entanglement.hpp"
#include "tnpoly/errors.hpp"
#include "tnpoly/mera_model.hpp"

using namespace tnpoly;

namespace {

std::vector<double> power_basis(double x, Index d) {
    std::vector<double> v(static_cast<std::size_t>(d), 1.0);
    for (Index k = 1; k < d; ++k) v[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k - 1)] * x;
    return v;
}

}  // namespace

TEST_CASE("tree_reconstruct") {
    SUBCASE("depth 2 against the explicit six-index loop") {
        const TreeNetwork net = random_tree(2, 3, {2}, Nonlinearity::Identity, Representation::Dual, 5);
        const Tensor v = tree_reconstruct(net);
        REQUIRE(v.shape() == Shape{3, 3, 3, 3});
        const Tensor& a = net.levels[0][0];
        const Tensor& b = net.levels[0][1];
        for (Index p1 = 0; p1 < 3; ++p1)
            for (Index p2 = 0; p2 < 3; ++p2)
                for (Index p3 = 0; p3 < 3; ++p3)
                    for (Index p4 = 0; p4 < 3; ++p4) {
                        double s = 0.0;
                        for (Index q1 = 0; q1 < 2; ++q1)
                            for (Index q2 = 0; q2 < 2; ++q2)
                                s += a({p1, p2, q1}) * b({p3, p4, q2}) * net.top({q1, q2});
                        CHECK(v({p1, p2, p3, p4}) == doctest::Approx(s).epsilon(1e-13));
                    }
    }
    SUBCASE("one-hot tensors give a one-hot coefficient tensor") {
        TreeNetwork net = random_tree(3, 2, {2, 2}, Nonlinearity::Identity, Representation::Dual, 1);
        for (auto& level : net.levels)
            for (Tensor& t : level) {
                t = Tensor(t.shape());
                t({0, 0, 0}) = 1.0;
            }
        net.top = Tensor(net.top.shape());
        net.top({0, 0}) = 1.0;
        const Tensor v = tree_reconstruct(net);
        CHECK(v[0] == 1.0);
        CHECK(v.norm() == 1.0);
    }
    SUBCASE("unit channels give a product over leaf pairs") {
        const TreeNetwork net = random_tree(3, 2, {1, 1}, Nonlinearity::Identity, Representation::Dual, 2);
        const PureState s = normalize(PureState(tree_reconstruct(net)));
        for (Index cut = 2; cut < 8; cut += 2) CHECK(cut_entropy(s, cut) < 1e-12);
    }
    CHECK_THROWS_AS(tree_reconstruct(random_tree(2, 2, {2}, Nonlinearity::Tanh, Representation::Dual, 1)),
                    ValidationError);
}

TEST_CASE("tree_forward") {
    SUBCASE("linear mode equals evaluation of the reconstruction") {
        Rng rng(4);
        for (int depth = 1; depth <= 3; ++depth)
            for (Index d : {2, 4}) {
                std::vector<Index> channels(static_cast<std::size_t>(depth - 1), 3);
                const TreeNetwork net = random_tree(depth, d, channels, Nonlinearity::Identity, Representation::Dual,
                                                    static_cast<std::uint64_t>(depth * 10 + d));
                const Tensor v = tree_reconstruct(net);
                for (int trial = 0; trial < 10; ++trial) {
                    const auto h = tnpoly::testing::random_inputs(static_cast<std::size_t>(net.leaves()), rng);
                    double ref = 0.0;
                    for (Index flat = 0; flat < v.size(); ++flat) {
                        const auto idx = unflatten_index(v.shape(), flat);
                        double term = v[flat];
                        for (std::size_t k = 0; k < idx.size(); ++k) term *= power_basis(h[k], d)[static_cast<std::size_t>(idx[k])];
                        ref += term;
                    }
                    CHECK(tree_forward(net, power_basis_inputs(h, d)) == doctest::Approx(ref).epsilon(1e-10));
                }
            }
    }
    SUBCASE("zero tensors with tanh give zero") {
        TreeNetwork net = random_tree(2, 3, {2}, Nonlinearity::Tanh, Representation::Dual, 3);
        for (auto& level : net.levels)
            for (Tensor& t : level) t = Tensor(t.shape());
        net.top = Tensor(net.top.shape());
        const std::vector<double> h{0.3, -0.2, 0.9, 0.1};
        CHECK(tree_forward(net, power_basis_inputs(h, 3)) == 0.0);
    }
    SUBCASE("lag selector inputs") {
        const std::vector<double> h{0.5, -1.5};
        const auto leaves = lag_selector_inputs(h, 4);
        REQUIRE(leaves.size() == 4);
        CHECK(leaves[3](0) == 1.0);
        CHECK(leaves[3](2) == -1.5);
    }
    SUBCASE("input count") {
        const TreeNetwork net = random_tree(2, 2, {2}, Nonlinearity::Tanh, Representation::Dual, 3);
        CHECK_THROWS_AS(tree_forward(net, power_basis_inputs(std::vector<double>{1.0, 2.0}, 2)), ValidationError);
    }
}

TEST_CASE("tree cut bound") {
    const TreeNetwork net = random_tree(3, 2, {2, 3}, Nonlinearity::Identity, Representation::Dual, 7);
    // cut 4 splits at the top: one level-1 channel of dim 3
    CHECK(tree_cut_log_bound(net, 4) == doctest::Approx(std::log(3.0)));
    // cut 1 isolates one leaf leg
    CHECK(tree_cut_log_bound(net, 1) == doctest::Approx(std::log(2.0)));
    // cut 2 isolates a level-0 channel (dim 2)
    CHECK(tree_cut_log_bound(net, 2) == doctest::Approx(std::log(2.0)));
    // cut 3: leaf 3 leg plus the channel of the first pair, or two leaf legs
    CHECK(tree_cut_log_bound(net, 3) == doctest::Approx(2.0 * std::log(2.0)));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const TreeNetwork r = random_tree(3, 2, {2, 2}, Nonlinearity::Identity, Representation::Dual, seed);
        const PureState s = normalize(PureState(tree_reconstruct(r)));
        for (Index cut = 1; cut < 8; ++cut) CHECK(cut_entropy(s, cut) <= tree_cut_log_bound(r, cut) + 1e-9);
    }
    CHECK_THROWS_AS(tree_cut_log_bound(net, 0), ValidationError);
}

TEST_CASE("TCN construction") {
    SUBCASE("saturation constant") {
        const double eps = 1e-6;
        const double lambda = saturation_constant(Nonlinearity::Tanh, eps);
        CHECK(lambda == doctest::Approx(std::atanh(1.0 - eps / 2.0)));
        CHECK(1.0 - std::tanh(lambda) < eps);
        CHECK(1.0 - apply(Nonlinearity::Sigmoid, saturation_constant(Nonlinearity::Sigmoid, eps)) < eps);
        CHECK_THROWS_AS(saturation_constant(Nonlinearity::Tanh, 0.0), ValidationError);
        CHECK_THROWS_AS(saturation_constant(Nonlinearity::Tanh, 1e-300), ValidationError);
        CHECK(saturation_constant(Nonlinearity::Identity, 1e-3) == 1.0);
    }
    SUBCASE("reference TCN") {
        TcnWeights w;
        w.nonlinearity = Nonlinearity::Identity;
        w.first = {{{1, 1}, {1, 1}}};
        w.top = {1, 1};
        CHECK(tcn_forward(w, std::vector<double>{0.1, 0.2, 0.3, 0.4}) == doctest::Approx(1.0));
        TcnWeights zero;
        CHECK(tcn_forward(zero, std::vector<double>{0.1, 0.2, 0.3, 0.4}) == 0.0);
    }
    SUBCASE("zero filters give F(0)") {
        TcnWeights w;
        w.nonlinearity = Nonlinearity::Sigmoid;
        const TreeNetwork net = tcn_tensors(w);
        const std::vector<double> h{0.7, -0.3, 0.2, 0.9};
        CHECK(tree_forward(net, power_basis_inputs(h, 2)) == doctest::Approx(0.5));
    }
    SUBCASE("channel 0 saturates") {
        TcnWeights w;
        w.epsilon = 1e-6;
        const TreeNetwork net = tcn_tensors(w);
        CHECK(net.levels[0][0]({0, 0, 0}) == doctest::Approx(std::atanh(1.0 - 5e-7)));
        CHECK(1.0 - std::tanh(net.levels[0][0]({0, 0, 0})) < w.epsilon);
    }
    SUBCASE("tree matches the TCN for random filters") {
        Rng rng(9);
        for (double eps : {1e-4, 1e-6}) {
            TcnWeights w;
            w.epsilon = eps;
            for (auto& f : w.first)
                for (double& x : f) x = rng.normal();
            for (double& x : w.top) x = rng.normal();
            const TreeNetwork net = tcn_tensors(w, 3);
            double worst = 0.0;
            for (int k = 0; k < 100; ++k) {
                const auto h = tnpoly::testing::random_inputs(4, rng);
                worst = std::max(worst, std::abs(tree_forward(net, power_basis_inputs(h, 3)) - tcn_forward(w, h)));
            }
            CHECK(worst < 10.0 * eps);
        }
    }
    CHECK_THROWS_AS(tcn_tensors(TcnWeights{}, 1), ValidationError);
}

TEST_CASE("symmetric filters") {
    TreeNetwork net = random_tree(2, 3, {2}, Nonlinearity::Tanh, Representation::Original, 4);
    // tie node 1 to node 0 with swapped child legs and symmetrize the top
    Tensor& ref = net.levels[0][0];
    Tensor& tied = net.levels[0][1];
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b)
            for (Index p = 0; p < 2; ++p) tied({a, b, p}) = ref({b, a, p});
    // the reference node must equal its own transpose as well
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < a; ++b)
            for (Index p = 0; p < 2; ++p) ref({a, b, p}) = ref({b, a, p});
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b)
            for (Index p = 0; p < 2; ++p) tied({a, b, p}) = ref({b, a, p});
    net.top({1, 0}) = net.top({0, 1});
    CHECK(check_symmetric_filters(net).symmetric);

    net.levels[0][1]({2, 1, 0}) += 1e-3;
    const FilterSymmetryReport bad = check_symmetric_filters(net);
    CHECK_FALSE(bad.symmetric);
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0].node == 1);
    CHECK(bad.violations[0].index == std::vector<Index>{2, 1, 0});

    int asymmetric = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
        if (!check_symmetric_filters(random_tree(2, 3, {2}, Nonlinearity::Tanh, Representation::Original, seed)).symmetric)
            ++asymmetric;
    CHECK(asymmetric == 100);
    CHECK_THROWS_AS(check_symmetric_filters(random_tree(2, 3, {2}, Nonlinearity::Tanh, Representation::Dual, 1)),
                    ValidationError);
}
