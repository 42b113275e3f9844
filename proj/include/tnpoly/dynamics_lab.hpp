#pragma once

// Synthetic order-P lag-L dynamics x_t = F(W . s_t) + noise with history
// s_t = [1, x_{t-1}, ..., x_{t-L}], tensor-train model fitting and closed-loop
// forecasting.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tnpoly/nonlinearity.hpp"
#include "tnpoly/problem_space.hpp"
#include "tnpoly/tensor_train.hpp"

namespace tnpoly {

/// |x| beyond this aborts generation and forecasting.
inline constexpr double kDivergenceLimit = 1e6;

struct SeriesDataset {
    std::vector<double> values;  // x_1 ... x_T
    int lag = 0;
    int order = 0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    Nonlinearity nonlinearity = Nonlinearity::Tanh;

    Index length() const { return static_cast<Index>(values.size()); }
    /// T > L and every value finite.
    void validate() const;
};

/// A truth is either a dense coefficient tensor (either representation) or an
/// original-representation tensor train with P cores of physical dim L+1.
using Truth = std::variant<CoeffTensor, TTState>;

/// `init` holds x_1 ... x_L in time order; the result has T values including them.
SeriesDataset generate_hnd(const Truth& truth, std::span<const double> init, Index T, double noise_std,
                           std::uint64_t seed, Nonlinearity f = Nonlinearity::Tanh);

struct FitOptions {
    int max_iterations = 5000;
    Nonlinearity nonlinearity = Nonlinearity::Tanh;
    std::uint64_t seed = 0;
    /// Trailing fraction of the windows held out for validation.
    double validation_fraction = 0.2;
    int gradient_check_parameters = 5;
    double finite_difference_step = 1e-6;
    /// Independent initializations; the lowest training loss wins.
    int restarts = 1;
    /// Worker threads across restarts.
    int jobs = 1;
};

struct FitReport {
    std::vector<double> loss_curve;  // training MSE after each accepted step, starting at the initialization
    double train_rmse = 0.0;
    double validation_rmse = 0.0;    // NaN when nothing is held out
    Index parameter_count = 0;
    /// Max relative deviation of analytic from central-difference gradients at initialization.
    double gradient_check = 0.0;
    int iterations = 0;
    int restart = 0;                 // index of the winning initialization
    Index train_samples = 0;
    Index validation_samples = 0;
    Nonlinearity nonlinearity = Nonlinearity::Tanh;
    std::vector<std::string> warnings;
};

std::pair<TTState, FitReport> fit_tt_model(const SeriesDataset& data, int lag, int order, Index bond,
                                            const FitOptions& opts);

/// Training MSE and its gradient with respect to every core entry (cores in
/// order, each row-major), over the windows of `values` ending in [begin, end).
struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossGradient tt_loss_gradient(const TTState& model, std::span<const double> values, int lag, Index begin, Index end,
                              Nonlinearity f);

/// One application of the map to a history in time order (oldest first).
double predict_next(const TTState& model, std::span<const double> history, Nonlinearity f);

/// Closed-loop rollout from `history` (L values, oldest first).
std::vector<double> forecast(const TTState& model, std::span<const double> history, Index horizon, Nonlinearity f);

double rmse(std::span<const double> pred, std::span<const double> truth);

}  // namespace tnpoly
