#include "tnpoly/problem_space.hpp"

#include <cmath>
#include <limits>

namespace tnpoly {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b, const char* what) {
    if (a != 0 && b > std::numeric_limits<std::int64_t>::max() / a)
        throw NumericalError(std::string(what) + " overflows 2^63");
    return a * b;
}

std::int64_t checked_pow(std::int64_t base, int exp, const char* what) {
    std::int64_t out = 1;
    for (int k = 0; k < exp; ++k) out = checked_mul(out, base, what);
    return out;
}

void require_nonnegative(int lag, int order) {
    if (lag < 0 || order < 0)
        throw ValidationError("L and P must be non-negative, got L=" + std::to_string(lag) +
                              " P=" + std::to_string(order));
}

void require_rep(const CoeffTensor& c, Representation rep, const char* op) {
    if (c.spec().rep != rep)
        throw ValidationError(std::string(op) + " expects a " + to_string(rep) + " tensor, got " +
                              to_string(c.spec().rep));
}

void require_dense_cap(const ProblemSpec& spec) {
    if (full_dimension(spec) > kMaxDenseEntries)
        throw CapExceeded(to_string(spec.rep) + " tensor for L=" + std::to_string(spec.lag) +
                          " P=" + std::to_string(spec.order) + " has " +
                          std::to_string(full_dimension(spec)) + " entries, above the dense cap");
}

// Dual flat index of an occupation vector: base P+1 digits, j_0 most significant.
Index dual_flat(std::span<const int> counts, int order) {
    Index flat = 0;
    for (int c : counts) flat = flat * (order + 1) + c;
    return flat;
}

std::vector<int> to_int(const std::vector<Index>& idx) { return {idx.begin(), idx.end()}; }

}  // namespace

std::string to_string(Representation rep) { return rep == Representation::Original ? "original" : "dual"; }

Representation representation_from_string(const std::string& name) {
    if (name == "original") return Representation::Original;
    if (name == "dual") return Representation::Dual;
    throw ValidationError("unknown representation '" + name + "' (expected original|dual)");
}

std::string to_string(const OccupationVector& counts) {
    std::string out = "(";
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(counts[k]);
    }
    return out + ")";
}

CoeffTensor::CoeffTensor(ProblemSpec spec) : spec_(spec) {
    require_nonnegative(spec.lag, spec.order);
    require_dense_cap(spec);
    tensor_ = Tensor(spec.shape());
}

CoeffTensor::CoeffTensor(ProblemSpec spec, Tensor tensor) : spec_(spec), tensor_(std::move(tensor)) {
    require_nonnegative(spec.lag, spec.order);
    if (tensor_.shape() != spec.shape())
        throw ValidationError("tensor shape " + shape_string(tensor_.shape()) + " does not match " +
                              to_string(spec.rep) + " shape " + shape_string(spec.shape()));
}

double& CoeffTensor::at(std::span<const int> idx) {
    std::vector<Index> i(idx.begin(), idx.end());
    return tensor_.at(i);
}

double CoeffTensor::at(std::span<const int> idx) const {
    std::vector<Index> i(idx.begin(), idx.end());
    return tensor_.at(i);
}

std::int64_t full_dimension(const ProblemSpec& spec) {
    require_nonnegative(spec.lag, spec.order);
    if (spec.rep == Representation::Original) return checked_pow(spec.lag + 1, spec.order, "full dimension");
    return checked_pow(spec.order + 1, spec.lag + 1, "full dimension");
}

std::int64_t binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t out = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        // out * (n - k + i) / i stays integral at every step
        const std::int64_t num = n - k + i;
        const std::int64_t g = std::gcd(out, i);
        out = checked_mul(out / g, num / (i / g), "binomial coefficient");
    }
    return out;
}

std::int64_t symmetric_dimension(int lag, int order) {
    require_nonnegative(lag, order);
    return binomial(static_cast<std::int64_t>(lag) + order, order);
}

double multinomial(std::span<const int> counts) {
    // product of binomial(j_0 + ... + j_r, j_r)
    std::int64_t total = 0;
    double out = 1.0;
    for (int c : counts) {
        total += c;
        out *= static_cast<double>(binomial(total, c));
    }
    return out;
}

std::vector<OccupationVector> enumerate_occupations(int lag, int order, std::int64_t cap) {
    const std::int64_t count = symmetric_dimension(lag, order);
    if (count > cap)
        throw CapExceeded(std::to_string(count) + " occupation vectors exceed the cap of " + std::to_string(cap));

    std::vector<OccupationVector> out;
    out.reserve(static_cast<std::size_t>(count));
    OccupationVector cur(static_cast<std::size_t>(lag) + 1, 0);
    // Depth-first over positions; values ascend at each position.
    auto recurse = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos + 1 == cur.size()) {
            cur[pos] = remaining;
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            cur[pos] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    recurse(recurse, 0, order);
    return out;
}

std::int64_t occupation_rank(std::span<const int> counts) {
    int remaining = 0;
    for (int c : counts) remaining += c;
    std::int64_t rank = 0;
    const auto n = static_cast<std::int64_t>(counts.size());
    for (std::int64_t pos = 0; pos + 1 < n; ++pos) {
        const std::int64_t slots = n - pos - 1;
        // vectors sharing the prefix with a smaller value here come first
        for (int v = 0; v < counts[static_cast<std::size_t>(pos)]; ++v)
            rank += binomial(remaining - v + slots - 1, slots - 1);
        remaining -= counts[static_cast<std::size_t>(pos)];
    }
    return rank;
}

OccupationVector occupation_of(std::span<const int> idx, int lag) {
    OccupationVector counts(static_cast<std::size_t>(lag) + 1, 0);
    for (int r : idx) {
        if (r < 0 || r > lag)
            throw ValidationError("multi-index entry " + std::to_string(r) + " outside [0, " + std::to_string(lag) + "]");
        ++counts[static_cast<std::size_t>(r)];
    }
    return counts;
}

CoeffTensor symmetrize(const CoeffTensor& w) {
    require_rep(w, Representation::Original, "symmetrize");
    const ProblemSpec& spec = w.spec();
    const Tensor& t = w.tensor();

    // Orbit sums per occupation class, addressed by lexicographic rank.
    std::vector<double> orbit_sum(static_cast<std::size_t>(symmetric_dimension(spec.lag, spec.order)), 0.0);
    std::vector<std::int64_t> class_of(static_cast<std::size_t>(t.size()));
    std::vector<Index> idx(static_cast<std::size_t>(t.rank()), 0);
    Index flat = 0;
    do {
        const std::int64_t cls = occupation_rank(occupation_of(to_int(idx), spec.lag));
        class_of[static_cast<std::size_t>(flat)] = cls;
        orbit_sum[static_cast<std::size_t>(cls)] += t[flat];
        ++flat;
    } while (next_index(t.shape(), idx));

    std::vector<double> orbit_size(orbit_sum.size(), 0.0);
    for (const std::int64_t cls : class_of) orbit_size[static_cast<std::size_t>(cls)] += 1.0;

    Tensor out(t.shape());
    for (Index k = 0; k < t.size(); ++k) {
        const auto cls = static_cast<std::size_t>(class_of[static_cast<std::size_t>(k)]);
        out[k] = orbit_sum[cls] / orbit_size[cls];
    }
    return {spec, std::move(out)};
}

bool is_permutation_symmetric(const CoeffTensor& w, double tol) {
    if (w.spec().rep != Representation::Original) return false;
    const CoeffTensor s = symmetrize(w);
    const double scale = std::max(1.0, w.tensor().flat().cwiseAbs().maxCoeff());
    return (s.tensor().flat() - w.tensor().flat()).cwiseAbs().maxCoeff() <= tol * scale;
}

CoeffTensor to_dual(const CoeffTensor& w) {
    require_rep(w, Representation::Original, "to_dual");
    const ProblemSpec dual_spec = w.spec().with(Representation::Dual);
    CoeffTensor v(dual_spec);
    const Tensor& t = w.tensor();
    std::vector<Index> idx(static_cast<std::size_t>(t.rank()), 0);
    Index flat = 0;
    do {
        const OccupationVector occ = occupation_of(to_int(idx), dual_spec.lag);
        v.tensor()[dual_flat(occ, dual_spec.order)] += t[flat];
        ++flat;
    } while (next_index(t.shape(), idx));
    return v;
}

CoeffTensor from_dual(const CoeffTensor& v) {
    require_rep(v, Representation::Dual, "from_dual");
    const ProblemSpec& spec = v.spec();
    const Tensor& t = v.tensor();

    std::vector<Index> idx(static_cast<std::size_t>(t.rank()), 0);
    Index flat = 0;
    do {
        int total = 0;
        for (Index c : idx) total += static_cast<int>(c);
        if (total != spec.order && t[flat] != 0.0)
            throw ValidationError("dual entry " + to_string(to_int(idx)) + " = " + std::to_string(t[flat]) +
                                  " violates the sum(counts) == P constraint");
        ++flat;
    } while (next_index(t.shape(), idx));

    CoeffTensor w(spec.with(Representation::Original));
    Tensor& out = w.tensor();
    std::vector<Index> widx(static_cast<std::size_t>(out.rank()), 0);
    flat = 0;
    do {
        const OccupationVector occ = occupation_of(to_int(widx), spec.lag);
        out[flat] = t[dual_flat(occ, spec.order)] / multinomial(occ);
        ++flat;
    } while (next_index(out.shape(), widx));
    return w;
}

ColVector<double> history_vector(std::span<const double> h) {
    ColVector<double> s(static_cast<Index>(h.size()) + 1);
    s(0) = 1.0;
    for (std::size_t k = 0; k < h.size(); ++k) s(static_cast<Index>(k) + 1) = h[k];
    return s;
}

double evaluate_original(const CoeffTensor& w, std::span<const double> h) {
    require_rep(w, Representation::Original, "evaluate_original");
    if (static_cast<int>(h.size()) != w.spec().lag)
        throw ValidationError("history length " + std::to_string(h.size()) + " != L=" + std::to_string(w.spec().lag));
    const ColVector<double> s = history_vector(h);
    const std::vector<ColVector<double>> copies(static_cast<std::size_t>(w.spec().order), s);
    return contract_vectors<double>(w.tensor(), copies);
}

double evaluate_dual(const CoeffTensor& v, std::span<const double> h) {
    require_rep(v, Representation::Dual, "evaluate_dual");
    if (static_cast<int>(h.size()) != v.spec().lag)
        throw ValidationError("history length " + std::to_string(h.size()) + " != L=" + std::to_string(v.spec().lag));
    const int d = v.spec().order + 1;
    std::vector<ColVector<double>> powers;
    powers.reserve(h.size() + 1);
    for (std::size_t r = 0; r <= h.size(); ++r) {
        const double x = r == 0 ? 1.0 : h[r - 1];
        ColVector<double> p(d);
        p(0) = 1.0;
        for (int k = 1; k < d; ++k) p(k) = p(k - 1) * x;
        powers.push_back(std::move(p));
    }
    return contract_vectors<double>(v.tensor(), powers);
}

double evaluate(const CoeffTensor& c, std::span<const double> h) {
    return c.spec().rep == Representation::Original ? evaluate_original(c, h) : evaluate_dual(c, h);
}

double inner_product(const CoeffTensor& a, const CoeffTensor& b) {
    if (!(a.spec() == b.spec())) throw ValidationError("inner product needs tensors of the same spec");
    return a.tensor().flat().dot(b.tensor().flat());
}

}  // namespace tnpoly
