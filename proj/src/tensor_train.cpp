#include "tnpoly/tensor_train.hpp"

#include <cmath>
#include <string>

#include <Eigen/QR>

#include "tnpoly/random.hpp"

namespace tnpoly {

using Matrix = Eigen::MatrixXd;

namespace {

// (r, d, r') core as the (r*d) x r' matrix.
Matrix left_unfolding(const Tensor& core) {
    return core.reshaped({core.extent(0) * core.extent(1), core.extent(2)}).matrix();
}

// (r, d, r') core as the r x (d*r') matrix.
Matrix right_unfolding(const Tensor& core) {
    return core.reshaped({core.extent(0), core.extent(1) * core.extent(2)}).matrix();
}

Tensor core_from(const Matrix& m, Index r, Index d, Index r_next) {
    return Tensor::from_matrix(m).reshaped({r, d, r_next});
}

Index keep_count(const SVDResult<double>& f, Index max_rank, double tol) {
    if (f.size() == 0) return 1;
    const double threshold = std::max(tol, kRoundoffFloor) * f.singular_values(0);
    return std::min(f.count_above(threshold), std::max<Index>(max_rank, 1));
}

Matrix thin_q(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    const Index k = std::min(m.rows(), m.cols());
    return qr.householderQ() * Matrix::Identity(m.rows(), k);
}

// m = Q R with Q thin.
std::pair<Matrix, Matrix> thin_qr(const Matrix& m) {
    Matrix q = thin_q(m);
    Matrix r = q.transpose() * m;
    return {std::move(q), std::move(r)};
}

// Moves the center one site to the right: site k becomes left-orthogonal.
void shift_right(TTState& tt, Index k) {
    Tensor& core = tt.cores[static_cast<std::size_t>(k)];
    const Index r = core.extent(0), d = core.extent(1);
    auto [q, rr] = thin_qr(left_unfolding(core));
    core = core_from(q, r, d, q.cols());
    Tensor& next = tt.cores[static_cast<std::size_t>(k + 1)];
    const Index dn = next.extent(1), rn = next.extent(2);
    next = core_from(rr * right_unfolding(next), rr.rows(), dn, rn);
}

// Moves the center one site to the left: site k becomes right-orthogonal.
void shift_left(TTState& tt, Index k) {
    Tensor& core = tt.cores[static_cast<std::size_t>(k)];
    const Index d = core.extent(1), r_next = core.extent(2);
    auto [q, rr] = thin_qr(right_unfolding(core).transpose());
    // right_unfolding = rr^T q^T
    core = core_from(q.transpose(), q.cols(), d, r_next);
    Tensor& prev = tt.cores[static_cast<std::size_t>(k - 1)];
    const Index rp = prev.extent(0), dp = prev.extent(1);
    prev = core_from(left_unfolding(prev) * rr.transpose(), rp, dp, rr.rows());
}

void require_nonempty(const TTState& tt) {
    if (tt.cores.empty()) throw ValidationError("tensor train has no cores");
}

}  // namespace

std::vector<Index> TTState::dims() const {
    std::vector<Index> out;
    for (const Tensor& c : cores) out.push_back(c.extent(1));
    return out;
}

std::vector<Index> TTState::ranks() const {
    std::vector<Index> out;
    if (cores.empty()) return out;
    out.push_back(cores.front().extent(0));
    for (const Tensor& c : cores) out.push_back(c.extent(2));
    return out;
}

Index TTState::max_rank() const {
    Index m = 1;
    for (Index r : ranks()) m = std::max(m, r);
    return m;
}

void TTState::validate() const {
    require_nonempty(*this);
    for (std::size_t k = 0; k < cores.size(); ++k) {
        if (cores[k].rank() != 3)
            throw ValidationError("core " + std::to_string(k) + " has rank " + std::to_string(cores[k].rank()) +
                                  ", expected 3");
        if (k > 0 && cores[k].extent(0) != cores[k - 1].extent(2))
            throw ValidationError("bond rank mismatch between cores " + std::to_string(k - 1) + " and " +
                                  std::to_string(k));
    }
    if (cores.front().extent(0) != 1 || cores.back().extent(2) != 1)
        throw ValidationError("boundary ranks must be 1");
    if (canonical_center && (*canonical_center < 0 || *canonical_center >= sites()))
        throw ValidationError("canonical center out of range");
}

double TruncationReport::total() const {
    double sq = 0.0;
    for (double e : discarded) sq += e * e;
    return std::sqrt(sq);
}

std::pair<TTState, TruncationReport> tt_decompose_reported(const Tensor& w, Index max_rank, double tol) {
    if (w.rank() < 1) throw ValidationError("tt_decompose needs a tensor of rank >= 1");
    for (Index k = 1; k < w.rank(); ++k)
        if (w.extent(k) != w.extent(0)) throw ValidationError("tt_decompose needs uniform local dimensions");
    if (w.size() > kMaxDenseEntries) throw CapExceeded("tensor too large for TT-SVD");
    if (!w.all_finite()) throw NumericalError("tt_decompose input has non-finite entries");

    const Index n = w.rank();
    const Index d = w.extent(0);
    TTState tt;
    TruncationReport report;
    RowMatrix<double> remainder = w.reshaped({1, w.size()}).matrix();
    Index r = 1;
    for (Index k = 0; k + 1 < n; ++k) {
        // rows: (r, d_k); columns: the remaining sites
        const Index cols = remainder.size() / (r * d);
        const Eigen::Map<const RowMatrix<double>> unfolded(remainder.data(), r * d, cols);
        const SVDResult<double> f = svd(unfolded);
        const Index keep = keep_count(f, max_rank, tol);
        report.discarded.push_back(f.discarded_weight(keep));
        tt.cores.push_back(core_from(f.left.leftCols(keep), r, d, keep));
        remainder = f.singular_values.head(keep).asDiagonal() * f.right.topRows(keep);
        r = keep;
    }
    tt.cores.push_back(Tensor(Shape{r, d, 1}, std::vector<double>(remainder.data(), remainder.data() + remainder.size())));
    tt.canonical_center = n - 1;
    return {std::move(tt), std::move(report)};
}

TTState tt_decompose(const Tensor& w, Index max_rank, double tol) {
    return tt_decompose_reported(w, max_rank, tol).first;
}

Tensor tt_reconstruct(const TTState& tt) {
    tt.validate();
    Index total = 1;
    Shape shape;
    for (Index d : tt.dims()) {
        if (total > kMaxDenseEntries / d) throw CapExceeded("TT reconstruction exceeds the dense cap");
        total *= d;
        shape.push_back(d);
    }
    // acc: (prod of dims so far) x r_k
    RowMatrix<double> acc = RowMatrix<double>::Ones(1, 1);
    for (const Tensor& core : tt.cores) {
        const Index r = core.extent(0), d = core.extent(1), r_next = core.extent(2);
        RowMatrix<double> next = acc * core.reshaped({r, d * r_next}).matrix();
        acc = Eigen::Map<RowMatrix<double>>(next.data(), next.rows() * d, r_next);
    }
    return Tensor(shape, std::vector<double>(acc.data(), acc.data() + acc.size()));
}

double tt_contract(const TTState& tt, std::span<const ColVector<double>> site_vectors) {
    tt.validate();
    if (static_cast<Index>(site_vectors.size()) != tt.sites())
        throw ValidationError("need one vector per TT site");
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t k = 0; k < tt.cores.size(); ++k) {
        const Tensor& core = tt.cores[k];
        const Index r = core.extent(0), d = core.extent(1), r_next = core.extent(2);
        const ColVector<double>& s = site_vectors[k];
        if (s.size() != d)
            throw ValidationError("vector length " + std::to_string(s.size()) + " != local dimension " +
                                  std::to_string(d) + " at site " + std::to_string(k));
        Matrix m = Matrix::Zero(r, r_next);
        for (Index a = 0; a < r; ++a)
            for (Index p = 0; p < d; ++p)
                for (Index b = 0; b < r_next; ++b) m(a, b) += core[(a * d + p) * r_next + b] * s(p);
        v = v * m;
    }
    return v(0);
}

double tt_contract_history(const TTState& tt, const ColVector<double>& s) {
    const std::vector<ColVector<double>> copies(tt.cores.size(), s);
    return tt_contract(tt, copies);
}

Index tt_parameter_count(const TTState& tt) {
    Index n = 0;
    for (const Tensor& c : tt.cores) n += c.size();
    return n;
}

std::int64_t tt_parameter_bound(int lag, int order, Index rank) {
    return static_cast<std::int64_t>(lag + 1) * order * rank * rank;
}

double tt_norm(const TTState& tt) {
    tt.validate();
    Matrix env = Matrix::Ones(1, 1);
    for (const Tensor& core : tt.cores) {
        const Index d = core.extent(1), r_next = core.extent(2);
        Matrix next = Matrix::Zero(r_next, r_next);
        const Matrix unfold = right_unfolding(core);  // r x (d r')
        const Matrix half = env * unfold;              // r x (d r')
        for (Index p = 0; p < d; ++p)
            next += unfold.middleCols(p * r_next, r_next).transpose() * half.middleCols(p * r_next, r_next);
        env = next;
    }
    return std::sqrt(std::max(env(0, 0), 0.0));
}

TTState tt_scaled(TTState tt, double factor) {
    tt.validate();
    if (tt.canonical_center) {
        // the center carries the norm; orthogonal cores stay untouched
        tt.cores[static_cast<std::size_t>(*tt.canonical_center)] *= factor;
        return tt;
    }
    const double per_core = std::pow(std::abs(factor), 1.0 / static_cast<double>(tt.sites()));
    for (Tensor& c : tt.cores) c *= per_core;
    if (factor < 0) tt.cores.front() *= -1.0;
    return tt;
}

TTState tt_canonicalize(const TTState& tt, Index center) {
    tt.validate();
    if (center < 0 || center >= tt.sites()) throw ValidationError("canonical center out of range");
    TTState out = tt;
    for (Index k = 0; k < center; ++k) shift_right(out, k);
    for (Index k = out.sites() - 1; k > center; --k) shift_left(out, k);
    out.canonical_center = center;
    return out;
}

bool is_canonical(const TTState& tt, double tol) {
    if (!tt.canonical_center) return false;
    const Index c = *tt.canonical_center;
    for (Index k = 0; k < tt.sites(); ++k) {
        if (k == c) continue;
        const Tensor& core = tt.cores[static_cast<std::size_t>(k)];
        Matrix gram;
        if (k < c) {
            const Matrix m = left_unfolding(core);
            gram = m.transpose() * m;
        } else {
            const Matrix m = right_unfolding(core);
            gram = m * m.transpose();
        }
        if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

std::vector<ColVector<double>> tt_schmidt_values(const TTState& tt) {
    tt.validate();
    if (!is_canonical(tt)) throw ValidationError("tensor train is not in canonical form");
    TTState work = tt;
    for (Index k = *work.canonical_center; k > 0; --k) shift_left(work, k);

    std::vector<ColVector<double>> out;
    for (Index k = 0; k + 1 < work.sites(); ++k) {
        Tensor& core = work.cores[static_cast<std::size_t>(k)];
        const Index r = core.extent(0), d = core.extent(1);
        const SVDResult<double> f = svd(left_unfolding(core));
        out.push_back(f.singular_values);
        core = core_from(f.left, r, d, f.size());
        Tensor& next = work.cores[static_cast<std::size_t>(k + 1)];
        const Index dn = next.extent(1), rn = next.extent(2);
        next = core_from(f.singular_values.asDiagonal() * f.right * right_unfolding(next), f.size(), dn, rn);
    }
    return out;
}

std::pair<TTState, TruncationReport> tt_round_reported(const TTState& tt, Index max_rank, double tol) {
    TTState work = tt_canonicalize(tt, 0);
    TruncationReport report;
    for (Index k = 0; k + 1 < work.sites(); ++k) {
        Tensor& core = work.cores[static_cast<std::size_t>(k)];
        const Index r = core.extent(0), d = core.extent(1);
        const SVDResult<double> f = svd(left_unfolding(core));
        const Index keep = keep_count(f, max_rank, tol);
        report.discarded.push_back(f.discarded_weight(keep));
        core = core_from(f.left.leftCols(keep), r, d, keep);
        Tensor& next = work.cores[static_cast<std::size_t>(k + 1)];
        const Index dn = next.extent(1), rn = next.extent(2);
        next = core_from(f.singular_values.head(keep).asDiagonal() * f.right.topRows(keep) * right_unfolding(next),
                         keep, dn, rn);
    }
    work.canonical_center = work.sites() - 1;
    return {std::move(work), std::move(report)};
}

TTState tt_round(const TTState& tt, Index max_rank, double tol) { return tt_round_reported(tt, max_rank, tol).first; }

TTState random_tt(Index n, Index d, Index bond, std::uint64_t seed) {
    if (n < 1 || d < 1 || bond < 1) throw ValidationError("random_tt needs n, d, D >= 1");
    Rng rng(seed);
    TTState tt;
    for (Index k = 0; k < n; ++k) {
        const Index r = k == 0 ? 1 : bond;
        const Index r_next = k == n - 1 ? 1 : bond;
        Tensor core({r, d, r_next});
        for (double& x : core.data()) x = rng.normal();
        tt.cores.push_back(std::move(core));
    }
    const double norm = tt_norm(tt);
    if (!(norm > 0.0)) throw NumericalError("random_tt drew a zero state");
    return tt_scaled(std::move(tt), 1.0 / norm);
}

PureState random_dense_state(Index n, Index d, std::uint64_t seed) {
    if (n < 1 || d < 1) throw ValidationError("random_dense_state needs n, d >= 1");
    Rng rng(seed);
    Tensor t(Shape(static_cast<std::size_t>(n), d));
    if (t.size() > kMaxDenseEntries) throw CapExceeded("dense state exceeds the dense cap");
    for (double& x : t.data()) x = rng.normal();
    return normalize(PureState(std::move(t)));
}

}  // namespace tnpoly
