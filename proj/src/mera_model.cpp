#include "tnpoly/mera_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tnpoly/random.hpp"

namespace tnpoly {

Index TreeNetwork::child_dim(int level) const {
    return level == 0 ? leaf_dim : channel_dims.at(static_cast<std::size_t>(level - 1));
}

void TreeNetwork::validate() const {
    if (depth < 1 || depth > 20) throw ValidationError("tree depth must be in [1, 20]");
    if (leaf_dim < 1) throw ValidationError("leaf dimension must be >= 1");
    if (static_cast<int>(channel_dims.size()) != depth - 1 || static_cast<int>(levels.size()) != depth - 1)
        throw ValidationError("tree of depth " + std::to_string(depth) + " needs " + std::to_string(depth - 1) +
                              " non-top levels");
    for (int l = 0; l + 1 < depth; ++l) {
        const auto expected = static_cast<std::size_t>(Index{1} << (depth - l - 1));
        const auto& level = levels[static_cast<std::size_t>(l)];
        if (level.size() != expected)
            throw ValidationError("tree level " + std::to_string(l) + " has " + std::to_string(level.size()) +
                                  " tensors, expected " + std::to_string(expected));
        const Shape shape{child_dim(l), child_dim(l), channel_dims[static_cast<std::size_t>(l)]};
        for (const Tensor& t : level)
            if (t.shape() != shape)
                throw ValidationError("tree level " + std::to_string(l) + " tensor has shape " +
                                      shape_string(t.shape()) + ", expected " + shape_string(shape));
    }
    const Shape top_shape{child_dim(depth - 1), child_dim(depth - 1)};
    if (top.shape() != top_shape)
        throw ValidationError("top tensor has shape " + shape_string(top.shape()) + ", expected " +
                              shape_string(top_shape));
}

namespace {

// Subtree tensor flattened as (leaf configurations) x (parent channel).
using Block = RowMatrix<double>;

// out[(l, r), p] = sum_{a,b} left[l, a] right[r, b] node[a, b, p]
Block merge(const Block& left, const Block& right, const Tensor& node, Index parent) {
    const Index a_dim = left.cols(), b_dim = right.cols();
    const Eigen::Map<const RowMatrix<double>> node_mat(node.data().data(), a_dim, b_dim * parent);
    const Block half = left * node_mat;  // (l) x (b p)
    Block out(left.rows() * right.rows(), parent);
    for (Index l = 0; l < left.rows(); ++l) {
        const Eigen::Map<const RowMatrix<double>> slice(half.row(l).data(), b_dim, parent);
        out.middleRows(l * right.rows(), right.rows()).noalias() = right * slice;
    }
    return out;
}

}  // namespace

Tensor tree_reconstruct(const TreeNetwork& net) {
    net.validate();
    if (net.nonlinearity != Nonlinearity::Identity)
        throw ValidationError("tree_reconstruct needs the linear (identity) network");
    Index total = 1;
    for (Index k = 0; k < net.leaves(); ++k) {
        if (total > kMaxDenseEntries / net.leaf_dim) throw CapExceeded("tree reconstruction exceeds the dense cap");
        total *= net.leaf_dim;
    }

    std::vector<Block> blocks(static_cast<std::size_t>(net.leaves()), Block::Identity(net.leaf_dim, net.leaf_dim));
    for (int l = 0; l + 1 < net.depth; ++l) {
        std::vector<Block> next;
        const auto& level = net.levels[static_cast<std::size_t>(l)];
        for (std::size_t m = 0; m < level.size(); ++m)
            next.push_back(merge(blocks[2 * m], blocks[2 * m + 1], level[m], net.channel_dims[static_cast<std::size_t>(l)]));
        blocks = std::move(next);
    }
    const Block full = merge(blocks[0], blocks[1], net.top, 1);
    return Tensor(Shape(static_cast<std::size_t>(net.leaves()), net.leaf_dim),
                  std::vector<double>(full.data(), full.data() + full.size()));
}

double tree_forward(const TreeNetwork& net, std::span<const Eigen::VectorXd> leaf_inputs) {
    net.validate();
    if (static_cast<Index>(leaf_inputs.size()) != net.leaves())
        throw ValidationError("tree needs " + std::to_string(net.leaves()) + " leaf inputs, got " +
                              std::to_string(leaf_inputs.size()));
    std::vector<Eigen::VectorXd> values(leaf_inputs.begin(), leaf_inputs.end());
    for (const auto& v : values)
        if (v.size() != net.leaf_dim) throw ValidationError("leaf input length does not match the leaf dimension");

    for (int l = 0; l + 1 < net.depth; ++l) {
        const auto& level = net.levels[static_cast<std::size_t>(l)];
        const Index a_dim = net.child_dim(l), parent = net.channel_dims[static_cast<std::size_t>(l)];
        std::vector<Eigen::VectorXd> next;
        for (std::size_t m = 0; m < level.size(); ++m) {
            const Eigen::Map<const RowMatrix<double>> node(level[m].data().data(), a_dim, a_dim * parent);
            const Eigen::RowVectorXd half = values[2 * m].transpose() * node;  // (b p)
            const Eigen::Map<const RowMatrix<double>> slice(half.data(), a_dim, parent);
            Eigen::VectorXd y = slice.transpose() * values[2 * m + 1];
            for (Index p = 0; p < parent; ++p) y(p) = apply(net.nonlinearity, y(p));
            next.push_back(std::move(y));
        }
        values = std::move(next);
    }
    const double z = values[0].dot(net.top.matrix() * values[1]);
    return apply(net.nonlinearity, z);
}

std::vector<Eigen::VectorXd> power_basis_inputs(std::span<const double> h, Index leaf_dim) {
    std::vector<Eigen::VectorXd> out;
    for (double x : h) {
        Eigen::VectorXd v(leaf_dim);
        v(0) = 1.0;
        for (Index k = 1; k < leaf_dim; ++k) v(k) = v(k - 1) * x;
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Eigen::VectorXd> lag_selector_inputs(std::span<const double> h, Index leaves) {
    return std::vector<Eigen::VectorXd>(static_cast<std::size_t>(leaves), history_vector(h));
}

TreeNetwork random_tree(int depth, Index leaf_dim, std::vector<Index> channel_dims, Nonlinearity f,
                        Representation layout, std::uint64_t seed) {
    TreeNetwork net;
    net.depth = depth;
    net.leaf_dim = leaf_dim;
    net.channel_dims = std::move(channel_dims);
    net.nonlinearity = f;
    net.layout = layout;
    if (static_cast<int>(net.channel_dims.size()) != depth - 1)
        throw ValidationError("random_tree needs depth-1 channel dimensions");
    Rng rng(seed);
    for (int l = 0; l + 1 < depth; ++l) {
        std::vector<Tensor> level;
        for (Index m = 0; m < (Index{1} << (depth - l - 1)); ++m) {
            Tensor t({net.child_dim(l), net.child_dim(l), net.channel_dims[static_cast<std::size_t>(l)]});
            for (double& x : t.data()) x = rng.normal();
            level.push_back(std::move(t));
        }
        net.levels.push_back(std::move(level));
    }
    net.top = Tensor({net.child_dim(depth - 1), net.child_dim(depth - 1)});
    for (double& x : net.top.data()) x = rng.normal();
    net.validate();
    return net;
}

double tree_cut_log_bound(const TreeNetwork& net, Index cut) {
    net.validate();
    if (cut < 1 || cut >= net.leaves()) throw ValidationError("tree cut out of range");
    // cost[side]: cheapest cut inside a subtree whose root sits on `side`
    // (0 = with the first `cut` leaves, 1 = with the rest). A leaf "root" on
    // the wrong side means its physical leg is cut.
    using Cost = std::array<double, 2>;
    const double leaf_edge = std::log(static_cast<double>(net.leaf_dim));
    std::vector<Cost> costs;
    for (Index leaf = 0; leaf < net.leaves(); ++leaf) {
        const int side = leaf < cut ? 0 : 1;
        Cost c{};
        c[side] = 0.0;
        c[1 - side] = leaf_edge;
        costs.push_back(c);
    }
    auto combine = [](const Cost& left, const Cost& right, double left_edge, double right_edge) {
        Cost out{};
        for (int side = 0; side < 2; ++side) {
            const double l = std::min(left[side], left[1 - side] + left_edge);
            const double r = std::min(right[side], right[1 - side] + right_edge);
            out[side] = l + r;
        }
        return out;
    };
    // the leaf legs are priced already, so the first merge must not switch sides
    double child_edge = std::numeric_limits<double>::infinity();
    for (int l = 0; l < net.depth; ++l) {
        std::vector<Cost> next;
        for (std::size_t m = 0; 2 * m < costs.size(); ++m)
            next.push_back(combine(costs[2 * m], costs[2 * m + 1], child_edge, child_edge));
        costs = std::move(next);
        if (l + 1 < net.depth) child_edge = std::log(static_cast<double>(net.channel_dims[static_cast<std::size_t>(l)]));
    }
    return std::min(costs[0][0], costs[0][1]);
}

double saturation_constant(Nonlinearity f, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive and finite");
    const double target = 1.0 - epsilon / 2.0;
    double lambda = 0.0;
    switch (f) {
        case Nonlinearity::Identity: lambda = 1.0; break;
        case Nonlinearity::Tanh: lambda = std::atanh(target); break;
        case Nonlinearity::Sigmoid: lambda = std::log(target / (1.0 - target)); break;
    }
    if (!std::isfinite(lambda) || !(1.0 - apply(f, lambda) < epsilon))
        throw ValidationError("epsilon " + std::to_string(epsilon) + " is not achievable with " + to_string(f));
    return lambda;
}

TreeNetwork tcn_tensors(const TcnWeights& weights, Index leaf_dim) {
    if (leaf_dim < 2) throw ValidationError("the TCN construction needs leaf dimension >= 2");
    const double lambda = saturation_constant(weights.nonlinearity, weights.epsilon);
    TreeNetwork net;
    net.depth = 2;
    net.leaf_dim = leaf_dim;
    net.channel_dims = {2};
    net.nonlinearity = weights.nonlinearity;
    net.layout = Representation::Dual;
    std::vector<Tensor> level;
    for (const auto& filter : weights.first) {
        Tensor t({leaf_dim, leaf_dim, 2});
        t({1, 0, 1}) = filter[0];
        t({0, 1, 1}) = filter[1];
        t({0, 0, 0}) = lambda;
        level.push_back(std::move(t));
    }
    net.levels.push_back(std::move(level));
    net.top = Tensor({2, 2});
    net.top({1, 0}) = weights.top[0];
    net.top({0, 1}) = weights.top[1];
    net.validate();
    return net;
}

double tcn_forward(const TcnWeights& weights, std::span<const double> h) {
    if (h.size() != 4) throw ValidationError("tcn_forward needs 4 inputs");
    const Nonlinearity f = weights.nonlinearity;
    const double y1 = apply(f, weights.first[0][0] * h[0] + weights.first[0][1] * h[1]);
    const double y2 = apply(f, weights.first[1][0] * h[2] + weights.first[1][1] * h[3]);
    return apply(f, weights.top[0] * y1 + weights.top[1] * y2);
}

FilterSymmetryReport check_symmetric_filters(const TreeNetwork& net, double tol) {
    net.validate();
    if (net.layout != Representation::Original)
        throw ValidationError("filter symmetry applies to the original-representation layout");
    FilterSymmetryReport report;
    for (int l = 0; l + 1 < net.depth; ++l) {
        const auto& level = net.levels[static_cast<std::size_t>(l)];
        const Tensor& reference = level.front();
        const Index c = net.child_dim(l), p_dim = net.channel_dims[static_cast<std::size_t>(l)];
        for (std::size_t m = 0; m < level.size(); ++m)
            for (Index a = 0; a < c; ++a)
                for (Index b = 0; b < c; ++b)
                    for (Index p = 0; p < p_dim; ++p) {
                        const double value = level[m]({a, b, p});
                        const double expected = reference({b, a, p});
                        if (std::abs(value - expected) > tol)
                            report.violations.push_back({l, static_cast<Index>(m), {a, b, p}, value, expected});
                    }
    }
    const Index c = net.child_dim(net.depth - 1);
    for (Index a = 0; a < c; ++a)
        for (Index b = a + 1; b < c; ++b)
            if (std::abs(net.top({a, b}) - net.top({b, a})) > tol)
                report.violations.push_back({net.depth - 1, 0, {a, b}, net.top({a, b}), net.top({b, a})});
    report.symmetric = report.violations.empty();
    return report;
}

}  // namespace tnpoly
