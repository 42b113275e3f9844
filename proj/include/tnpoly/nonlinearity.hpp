#pragma once

#include <cmath>
#include <string>

#include "tnpoly/errors.hpp"

namespace tnpoly {

enum class Nonlinearity { Identity, Tanh, Sigmoid };

inline double apply(Nonlinearity f, double x) {
    switch (f) {
        case Nonlinearity::Identity: return x;
        case Nonlinearity::Tanh: return std::tanh(x);
        case Nonlinearity::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

inline double derivative(Nonlinearity f, double x) {
    switch (f) {
        case Nonlinearity::Identity: return 1.0;
        case Nonlinearity::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Nonlinearity::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

inline std::string to_string(Nonlinearity f) {
    switch (f) {
        case Nonlinearity::Identity: return "identity";
        case Nonlinearity::Tanh: return "tanh";
        case Nonlinearity::Sigmoid: return "sigmoid";
    }
    return "unknown";
}

inline Nonlinearity nonlinearity_from_string(const std::string& name) {
    if (name == "identity") return Nonlinearity::Identity;
    if (name == "tanh") return Nonlinearity::Tanh;
    if (name == "sigmoid") return Nonlinearity::Sigmoid;
    throw ValidationError("unknown nonlinearity '" + name + "' (expected identity|tanh|sigmoid)");
}

}  // namespace tnpoly
