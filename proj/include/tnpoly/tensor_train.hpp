#pragma once

// Tensor trains (open-boundary MPS): cores of shape (r_{k-1}, d_k, r_k) with
// r_0 = r_n = 1.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tnpoly/state.hpp"
#include "tnpoly/tensor_core.hpp"

namespace tnpoly {

inline constexpr Index kUnboundedRank = std::numeric_limits<Index>::max();
/// Singular values below this fraction of the bond's largest one are always dropped.
inline constexpr double kRoundoffFloor = 1e-14;

struct TTState {
    std::vector<Tensor> cores;
    /// Set when every core left of it is left-orthogonal and every core right
    /// of it is right-orthogonal.
    std::optional<Index> canonical_center;

    Index sites() const { return static_cast<Index>(cores.size()); }
    std::vector<Index> dims() const;
    /// r_0 ... r_n
    std::vector<Index> ranks() const;
    Index max_rank() const;

    /// Throws ValidationError on inconsistent shapes.
    void validate() const;
};

/// Per-bond Frobenius norms of the singular values thrown away.
struct TruncationReport {
    std::vector<double> discarded;
    double total() const;
};

std::pair<TTState, TruncationReport> tt_decompose_reported(const Tensor& w, Index max_rank = kUnboundedRank,
                                                           double tol = 0.0);
TTState tt_decompose(const Tensor& w, Index max_rank = kUnboundedRank, double tol = 0.0);

Tensor tt_reconstruct(const TTState& tt);

/// Contracts every physical leg with the matching vector.
double tt_contract(const TTState& tt, std::span<const ColVector<double>> site_vectors);
/// Contracts every physical leg with the same history vector s = [1, h_1, ..., h_L].
double tt_contract_history(const TTState& tt, const ColVector<double>& s);

Index tt_parameter_count(const TTState& tt);
/// (L+1) P R^2
std::int64_t tt_parameter_bound(int lag, int order, Index rank);

double tt_norm(const TTState& tt);
TTState tt_scaled(TTState tt, double factor);

/// QR/LQ sweeps putting the orthogonality center at `center`; same tensor.
TTState tt_canonicalize(const TTState& tt, Index center);
bool is_canonical(const TTState& tt, double tol = 1e-10);

/// Schmidt values across every bond of a canonical TT, bond k between sites k and k+1.
std::vector<ColVector<double>> tt_schmidt_values(const TTState& tt);

std::pair<TTState, TruncationReport> tt_round_reported(const TTState& tt, Index max_rank = kUnboundedRank,
                                                       double tol = 0.0);
TTState tt_round(const TTState& tt, Index max_rank = kUnboundedRank, double tol = 0.0);

/// iid standard normal cores with interior bond D, scaled to unit norm.
TTState random_tt(Index n, Index d, Index bond, std::uint64_t seed);
/// iid standard normal entries on n sites of dimension d, normalized.
PureState random_dense_state(Index n, Index d, std::uint64_t seed);

}  // namespace tnpoly
