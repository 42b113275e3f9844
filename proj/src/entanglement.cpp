#include "tnpoly/entanglement.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace tnpoly {

PureState::PureState(Tensor t, double recorded_norm) : coefficients(std::move(t)), norm(recorded_norm) {
    for (Index k = 1; k < coefficients.rank(); ++k)
        if (coefficients.extent(k) != coefficients.extent(0))
            throw ValidationError("pure state needs a uniform local dimension, got shape " +
                                  shape_string(coefficients.shape()));
}

PureState normalize(const PureState& state) {
    const double n = state.coefficients.norm();
    if (!(n > 0.0)) throw ValidationError("cannot normalize a zero state");
    if (!std::isfinite(n)) throw NumericalError("state norm is not finite");
    return PureState(state.coefficients * (1.0 / n), n);
}

namespace {

void require_cut(const PureState& state, Index cut) {
    if (cut < 1 || cut > state.sites() - 1)
        throw ValidationError("cut " + std::to_string(cut) + " outside [1, " + std::to_string(state.sites() - 1) + "]");
}

void require_normalized(const PureState& state) {
    if (std::abs(state.coefficients.norm() - 1.0) > 1e-10)
        throw ValidationError("state is not normalized (norm " + std::to_string(state.coefficients.norm()) + ")");
}

// Gram matrix of the smaller side of the bipartition.
Eigen::MatrixXd smaller_gram(const PureState& state, Index cut) {
    const Tensor m = matricize(state.coefficients, cut);
    const auto mat = m.matrix();
    if (std::min(mat.rows(), mat.cols()) * std::min(mat.rows(), mat.cols()) > kMaxSvdEntries)
        throw CapExceeded("reduced density matrix exceeds the dense cap");
    if (mat.rows() <= mat.cols()) return mat * mat.transpose();
    return mat.transpose() * mat;
}

double entropy_of_symmetric(const Eigen::MatrixXd& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rho, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = solver.eigenvalues();
    return entropy_of_probabilities({ev.data(), static_cast<std::size_t>(ev.size())});
}

ModelFit least_squares(const std::string& name, const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    ModelFit fit;
    fit.name = name;
    fit.parameters = static_cast<int>(design.cols());
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    fit.coefficients.assign(coef.data(), coef.data() + coef.size());
    fit.residual = (design * coef - y).squaredNorm();
    return fit;
}

}  // namespace

ReducedDensityMatrix reduced_density_matrix(const PureState& state, Index cut) {
    require_cut(state, cut);
    require_normalized(state);
    const Tensor m = matricize(state.coefficients, cut);
    const auto mat = m.matrix();
    if (mat.rows() * mat.rows() > kMaxSvdEntries) throw CapExceeded("reduced density matrix exceeds the dense cap");
    Eigen::MatrixXd rho = mat * mat.transpose();
    // exact symmetry; the product is symmetric up to roundoff only
    rho = 0.5 * (rho + rho.transpose()).eval();
    return {std::move(rho), cut};
}

double entropy_of_probabilities(std::span<const double> p) {
    double s = 0.0;
    for (double x : p)
        if (x >= kEigenvalueFloor) s -= x * std::log(x);
    return std::max(s, 0.0);
}

double entropy(const ReducedDensityMatrix& rho) {
    const double trace = rho.matrix.trace();
    if (std::abs(trace - 1.0) > 1e-8)
        throw ValidationError("density matrix trace " + std::to_string(trace) + " deviates from 1");
    return entropy_of_symmetric(rho.matrix);
}

double entropy_of_schmidt_values(const Eigen::VectorXd& schmidt) {
    const double total = schmidt.squaredNorm();
    if (!(total > 0.0)) throw ValidationError("Schmidt values are all zero");
    const Eigen::VectorXd p = schmidt.array().square() / total;
    return entropy_of_probabilities({p.data(), static_cast<std::size_t>(p.size())});
}

double cut_entropy(const PureState& state, Index cut) {
    require_cut(state, cut);
    require_normalized(state);
    return entropy_of_symmetric(smaller_gram(state, cut));
}

std::string to_string(ScalingClass c) {
    switch (c) {
        case ScalingClass::Disentangled: return "Disentangled";
        case ScalingClass::AreaLaw: return "AreaLaw";
        case ScalingClass::LogCorrection: return "LogCorrection";
        case ScalingClass::VolumeLaw: return "VolumeLaw";
    }
    return "Unknown";
}

ScalingFit classify_scaling(std::span<const double> samples, std::span<const double> bounds, double penalty_factor) {
    const auto n = static_cast<Index>(samples.size());
    if (n < 4) throw ValidationError("scaling fit needs at least 4 cut entropies, got " + std::to_string(n));
    if (!bounds.empty() && static_cast<Index>(bounds.size()) != n)
        throw ValidationError("bounds must match the samples one to one");

    Eigen::VectorXd y(n);
    Eigen::MatrixXd constant(n, 1), logarithmic(n, 2), linear(n, 2);
    for (Index k = 0; k < n; ++k) {
        const double l = static_cast<double>(k + 1);
        y(k) = samples[static_cast<std::size_t>(k)];
        constant(k, 0) = logarithmic(k, 0) = linear(k, 0) = 1.0;
        logarithmic(k, 1) = std::log(l);
        linear(k, 1) = l;
    }

    ScalingFit out;
    out.penalty_factor = penalty_factor;
    if (bounds.empty()) {
        out.penalty_scale = y.squaredNorm();
    } else {
        out.penalty_scale = 0.0;
        for (double b : bounds) out.penalty_scale += b * b;
    }
    out.models = {least_squares("constant", constant, y), least_squares("log", logarithmic, y),
                  least_squares("linear", linear, y)};
    for (ModelFit& m : out.models)
        m.score = m.residual + penalty_factor * static_cast<double>(m.parameters - 1) * out.penalty_scale;

    if (y.cwiseAbs().maxCoeff() < kDisentangledThreshold) {
        out.scaling_class = ScalingClass::Disentangled;
        return out;
    }

    // Ties within roundoff go to the earlier (simpler) model.
    const double tie = 1e-12 * (1.0 + y.squaredNorm());
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.models.size(); ++k)
        if (out.models[k].score < out.models[best].score - tie) best = k;
    static constexpr std::array<ScalingClass, 3> classes = {ScalingClass::AreaLaw, ScalingClass::LogCorrection,
                                                            ScalingClass::VolumeLaw};
    out.scaling_class = classes[best];
    return out;
}

double cut_bound(const ProblemSpec& spec, Index cut) {
    const Index n = spec.sites();
    return static_cast<double>(std::min(cut, n - cut)) * std::log(static_cast<double>(spec.local_dim()));
}

EEProfile ee_profile(const PureState& state, const ProblemSpec& spec, double penalty_factor) {
    if (state.sites() != spec.sites() || (state.sites() > 0 && state.local_dim() != spec.local_dim()))
        throw ValidationError("state shape " + shape_string(state.coefficients.shape()) + " does not match the " +
                              to_string(spec.rep) + " lattice " + shape_string(spec.shape()));
    if (state.coefficients.size() > kMaxDenseEntries) throw CapExceeded("state exceeds the dense cap");
    const PureState unit = normalize(state);

    EEProfile profile;
    const Index n = unit.sites();
    for (Index cut = 1; cut < n; ++cut) {
        profile.entropies.push_back(cut_entropy(unit, cut));
        profile.bounds.push_back(cut_bound(spec, cut));
    }

    const double peak = profile.entropies.empty()
                            ? 0.0
                            : *std::max_element(profile.entropies.begin(), profile.entropies.end());
    const auto half = static_cast<std::size_t>(n / 2);
    if (half >= 4) {
        profile.fit = classify_scaling(std::span<const double>(profile.entropies).first(half),
                                       std::span<const double>(profile.bounds).first(half), penalty_factor);
        profile.scaling_class = peak < kDisentangledThreshold ? ScalingClass::Disentangled : profile.fit->scaling_class;
    } else if (peak < kDisentangledThreshold) {
        profile.scaling_class = ScalingClass::Disentangled;
    }

    if (spec.rep == Representation::Original && spec.order >= 2)
        profile.replica_cut_ambiguous = is_permutation_symmetric(CoeffTensor(spec, state.coefficients));
    return profile;
}

EEProfile ee_profile(const CoeffTensor& c, double penalty_factor) {
    return ee_profile(PureState(c.tensor()), c.spec(), penalty_factor);
}

std::vector<double> tt_cut_entropies(const TTState& tt) {
    std::vector<double> out;
    for (const Eigen::VectorXd& s : tt_schmidt_values(tt)) out.push_back(entropy_of_schmidt_values(s));
    return out;
}

}  // namespace tnpoly
