#pragma once

// Disentangler-free binary-tree MERA. Leaves pair contiguously, (0,1)(2,3)...,
// level by level; each non-top node holds a (child, child, parent) tensor and
// the top node a (child, child) matrix. As a sequence model every node applies
// the nonlinearity to its channel outputs.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tnpoly/nonlinearity.hpp"
#include "tnpoly/problem_space.hpp"
#include "tnpoly/tensor_core.hpp"

namespace tnpoly {

struct TreeNetwork {
    int depth = 1;                         // 2^depth leaves
    Index leaf_dim = 2;
    std::vector<Index> channel_dims;       // parent dims of levels 0 .. depth-2
    std::vector<std::vector<Tensor>> levels;
    Tensor top;
    Nonlinearity nonlinearity = Nonlinearity::Identity;
    Representation layout = Representation::Dual;

    Index leaves() const { return Index{1} << depth; }
    /// Dimension of the child legs entering level `level` (depth-1 is the top).
    Index child_dim(int level) const;
    void validate() const;
};

/// Coefficient tensor over the leaves (linear mode only).
Tensor tree_reconstruct(const TreeNetwork& net);

/// Level-by-level evaluation; one input vector per leaf.
double tree_forward(const TreeNetwork& net, std::span<const Eigen::VectorXd> leaf_inputs);

/// Dual layout inputs: leaf k gets (1, h_k, h_k^2, ..., h_k^{d-1}).
std::vector<Eigen::VectorXd> power_basis_inputs(std::span<const double> h, Index leaf_dim);
/// Original layout inputs: every leaf gets s = [1, h_1, ..., h_L].
std::vector<Eigen::VectorXd> lag_selector_inputs(std::span<const double> h, Index leaves);

TreeNetwork random_tree(int depth, Index leaf_dim, std::vector<Index> channel_dims, Nonlinearity f,
                        Representation layout, std::uint64_t seed);

/// ln of the smallest product of bond dimensions whose removal separates the
/// first `cut` leaves from the rest; caps the entropy of the linear tree state.
double tree_cut_log_bound(const TreeNetwork& net, Index cut);

struct TcnWeights {
    std::array<std::array<double, 2>, 2> first{};  // first[m] = filter of first-layer node m
    std::array<double, 2> top{};
    double epsilon = 1e-6;
    Nonlinearity nonlinearity = Nonlinearity::Tanh;
};

/// Lambda with 1 - F(Lambda) = epsilon / 2.
double saturation_constant(Nonlinearity f, double epsilon);

/// Depth-2 dual-layout tree whose forward pass reproduces the 2-layer TCN up
/// to epsilon: channel 1 carries the filter, channel 0 saturates to ~1.
TreeNetwork tcn_tensors(const TcnWeights& weights, Index leaf_dim = 2);

/// y1 = F(a1 h1 + a2 h2), y2 = F(b1 h3 + b2 h4), x = F(c1 y1 + c2 y2).
double tcn_forward(const TcnWeights& weights, std::span<const double> h);

struct FilterViolation {
    int level = 0;       // depth-1 is the top
    Index node = 0;
    std::vector<Index> index;
    double value = 0.0;
    double expected = 0.0;
};

struct FilterSymmetryReport {
    bool symmetric = true;
    std::vector<FilterViolation> violations;
};

/// Original layout: every non-top tensor must equal the first node's tensor
/// with its child legs swapped, and the top must be symmetric.
FilterSymmetryReport check_symmetric_filters(const TreeNetwork& net, double tol = 1e-10);

}  // namespace tnpoly
