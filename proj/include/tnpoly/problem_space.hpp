#pragma once

// The order-P lag-L polynomial problem in its two lattices.
//
// Original representation: P replica sites, each with L+1 local states; index
// value r selects the factor h_{t-r}, and r = 0 is the constant 1.
// Dual representation: L+1 lag sites (the constant first), each with P+1 local
// states giving the power of that lag.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tnpoly/tensor_core.hpp"

namespace tnpoly {

enum class Representation { Original, Dual };

std::string to_string(Representation rep);
Representation representation_from_string(const std::string& name);

struct ProblemSpec {
    int lag = 0;    // L
    int order = 0;  // P
    Representation rep = Representation::Original;

    int sites() const { return rep == Representation::Original ? order : lag + 1; }
    int local_dim() const { return rep == Representation::Original ? lag + 1 : order + 1; }
    Shape shape() const { return Shape(static_cast<std::size_t>(sites()), local_dim()); }

    ProblemSpec with(Representation r) const { return {lag, order, r}; }

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Entries in [0, L]; one per replica site.
using MultiIndex = std::vector<int>;
/// Exponent counts j_0 ... j_L.
using OccupationVector = std::vector<int>;

std::string to_string(const OccupationVector& counts);

/// Coefficient tensor tagged with the problem it belongs to.
class CoeffTensor {
public:
    /// Zero tensor of the spec's shape (subject to the dense cap).
    explicit CoeffTensor(ProblemSpec spec);
    CoeffTensor(ProblemSpec spec, Tensor tensor);

    const ProblemSpec& spec() const { return spec_; }
    const Tensor& tensor() const { return tensor_; }
    Tensor& tensor() { return tensor_; }

    double& at(std::span<const int> idx);
    double at(std::span<const int> idx) const;

private:
    ProblemSpec spec_;
    Tensor tensor_;
};

/// (L+1)^P or (P+1)^(L+1); throws NumericalError past 2^63.
std::int64_t full_dimension(const ProblemSpec& spec);
/// binomial(L+P, P).
std::int64_t symmetric_dimension(int lag, int order);
std::int64_t binomial(std::int64_t n, std::int64_t k);
/// P! / prod_r counts[r]!; the size of the permutation orbit with these counts.
double multinomial(std::span<const int> counts);

inline constexpr std::int64_t kDefaultEnumerationCap = 1'000'000;

/// All length-(L+1) non-negative vectors summing to P, lexicographic.
std::vector<OccupationVector> enumerate_occupations(int lag, int order,
                                                    std::int64_t cap = kDefaultEnumerationCap);
/// Position of `counts` in the lexicographic enumeration above.
std::int64_t occupation_rank(std::span<const int> counts);

OccupationVector occupation_of(std::span<const int> idx, int lag);

/// Orbit average over all index permutations (original representation only).
CoeffTensor symmetrize(const CoeffTensor& w);
bool is_permutation_symmetric(const CoeffTensor& w, double tol = 1e-12);

CoeffTensor to_dual(const CoeffTensor& w);
/// Equal-weight gauge: W[i] = V[occ(i)] / multinomial(occ(i)). Rejects nonzero
/// entries off the sum(counts) == P constraint.
CoeffTensor from_dual(const CoeffTensor& v);

/// [1, h_1, ..., h_L]
ColVector<double> history_vector(std::span<const double> h);

double evaluate_original(const CoeffTensor& w, std::span<const double> h);
/// Sums over every dual entry, constrained or not.
double evaluate_dual(const CoeffTensor& v, std::span<const double> h);
double evaluate(const CoeffTensor& c, std::span<const double> h);

double inner_product(const CoeffTensor& a, const CoeffTensor& b);

}  // namespace tnpoly
