#pragma once

// Von Neumann entanglement entropy of coefficient tensors read as pure states,
// contiguous-cut profiles with their theoretical caps, and a least-squares
// classifier for how the profile scales with subsystem size. Entropies are in
// nats throughout.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tnpoly/problem_space.hpp"
#include "tnpoly/state.hpp"
#include "tnpoly/tensor_train.hpp"

namespace tnpoly {

/// Eigenvalues below this count as exact zeros in -sum lambda ln lambda.
inline constexpr double kEigenvalueFloor = 1e-12;
/// Profiles whose largest entropy is below this are disentangled.
inline constexpr double kDisentangledThreshold = 1e-9;
inline constexpr double kDefaultComplexityPenalty = 0.05;

struct ReducedDensityMatrix {
    Eigen::MatrixXd matrix;
    /// Number of leading sites in subsystem A.
    Index cut = 0;
};

/// rho_A = M M^T with M the state's matricization at `cut`.
ReducedDensityMatrix reduced_density_matrix(const PureState& state, Index cut);

double entropy(const ReducedDensityMatrix& rho);
/// -sum p ln p over a probability vector, with the eigenvalue floor applied.
double entropy_of_probabilities(std::span<const double> p);
/// Entropy of the normalized squared Schmidt values.
double entropy_of_schmidt_values(const Eigen::VectorXd& schmidt);

/// Entropy at `cut`, computed from whichever side has the smaller Hilbert space.
double cut_entropy(const PureState& state, Index cut);

enum class ScalingClass { Disentangled, AreaLaw, LogCorrection, VolumeLaw };
std::string to_string(ScalingClass c);

struct ModelFit {
    std::string name;                  // "constant", "log", "linear"
    int parameters = 0;
    std::vector<double> coefficients;  // a, then b
    double residual = 0.0;             // sum of squared residuals
    double score = 0.0;                // residual + complexity penalty
};

struct ScalingFit {
    ScalingClass scaling_class = ScalingClass::Disentangled;
    std::array<ModelFit, 3> models;    // constant, log, linear
    double penalty_factor = kDefaultComplexityPenalty;
    /// Residual scale the penalty is measured in: sum of squared bounds when
    /// bounds were supplied, else sum of squared samples.
    double penalty_scale = 0.0;
};

/// Fits S(l), l = 1..n, to {c}, {a + b ln l}, {a + b l}. Each extra parameter
/// costs penalty_factor * penalty_scale. Needs at least 4 samples.
ScalingFit classify_scaling(std::span<const double> samples, std::span<const double> bounds = {},
                            double penalty_factor = kDefaultComplexityPenalty);

struct EEProfile {
    std::vector<double> entropies;  // S(l), l = 1..n-1
    std::vector<double> bounds;     // cap per cut
    /// Absent when the profile is entangled but has fewer than 4 fit points.
    std::optional<ScalingClass> scaling_class;
    std::optional<ScalingFit> fit;
    /// Set for permutation-symmetric original-representation states: replica
    /// sites of the symmetric subspace admit no tensor-product bipartition, so
    /// the profile describes the gauge-fixed dense tensor only.
    bool replica_cut_ambiguous = false;
};

/// min(l, n_sites - l) * ln(local dim) for the representation's lattice.
double cut_bound(const ProblemSpec& spec, Index cut);

EEProfile ee_profile(const PureState& state, const ProblemSpec& spec,
                     double penalty_factor = kDefaultComplexityPenalty);
EEProfile ee_profile(const CoeffTensor& c, double penalty_factor = kDefaultComplexityPenalty);

/// Entropy across every bond of a canonical tensor train.
std::vector<double> tt_cut_entropies(const TTState& tt);

}  // namespace tnpoly
