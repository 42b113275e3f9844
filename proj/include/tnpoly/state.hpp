#pragma once

#include "tnpoly/tensor_core.hpp"

namespace tnpoly {

/// Coefficients over n sites of uniform local dimension, read as a pure state.
struct PureState {
    Tensor coefficients;
    /// Norm the coefficients had before normalize(); 1 for states built normalized.
    double norm = 1.0;

    PureState() = default;
    explicit PureState(Tensor t, double recorded_norm = 1.0);

    Index sites() const { return coefficients.rank(); }
    Index local_dim() const { return coefficients.rank() == 0 ? 1 : coefficients.extent(0); }
};

PureState normalize(const PureState& state);

}  // namespace tnpoly
