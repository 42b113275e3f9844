#include "tnpoly/dynamics_lab.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "tnpoly/random.hpp"

namespace tnpoly {

void SeriesDataset::validate() const {
    if (lag < 0 || order < 0) throw ValidationError("series lag and order must be non-negative");
    if (length() <= lag)
        throw ValidationError("series of length " + std::to_string(length()) + " needs more than L = " +
                              std::to_string(lag) + " values");
    for (std::size_t t = 0; t < values.size(); ++t)
        if (!std::isfinite(values[t])) throw ValidationError("series value " + std::to_string(t + 1) + " is not finite");
    if (!(noise_std >= 0.0)) throw ValidationError("noise_std must be >= 0");
}

namespace {

// [x_{t-1}, ..., x_{t-L}] for the value at position t.
std::vector<double> lags_before(std::span<const double> values, Index t, int lag) {
    std::vector<double> h(static_cast<std::size_t>(lag));
    for (int r = 0; r < lag; ++r) h[static_cast<std::size_t>(r)] = values[static_cast<std::size_t>(t - 1 - r)];
    return h;
}

void check_step(double x, Index step) {
    if (!std::isfinite(x) || std::abs(x) > kDivergenceLimit)
        throw NumericalError("dynamics diverged at step " + std::to_string(step) + " (|x| > 1e6)");
}

void check_tt_truth(const TTState& tt, int lag) {
    tt.validate();
    for (Index d : tt.dims())
        if (d != lag + 1)
            throw ValidationError("TT truth has physical dimension " + std::to_string(d) + ", expected L+1 = " +
                                  std::to_string(lag + 1));
}

struct Windows {
    RowMatrix<double> s;    // N x (L+1)
    Eigen::VectorXd y;      // N
};

Windows make_windows(std::span<const double> values, int lag, Index begin, Index end) {
    Windows w;
    const Index n = std::max<Index>(end - begin, 0);
    w.s.resize(n, lag + 1);
    w.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const Index t = begin + i;
        w.s(i, 0) = 1.0;
        for (int r = 0; r < lag; ++r) w.s(i, r + 1) = values[static_cast<std::size_t>(t - 1 - r)];
        w.y(i) = values[static_cast<std::size_t>(t)];
    }
    return w;
}

struct CoreShape {
    Index left, dim, right;
    Index size() const { return left * dim * right; }
};

class TTObjective {
public:
    TTObjective(std::vector<CoreShape> shapes, const Windows& w, Nonlinearity f)
        : shapes_(std::move(shapes)), w_(w), f_(f) {
        offsets_.push_back(0);
        for (const CoreShape& c : shapes_) offsets_.push_back(offsets_.back() + c.size());
    }

    Index parameters() const { return offsets_.back(); }

    double loss(std::span<const double> theta) const { return evaluate(theta, nullptr); }
    double loss_gradient(std::span<const double> theta, std::vector<double>& grad) const {
        return evaluate(theta, &grad);
    }

private:
    using Mat = RowMatrix<double>;

    Eigen::Map<const Mat> core(std::span<const double> theta, std::size_t k, Index rows, Index cols) const {
        return Eigen::Map<const Mat>(theta.data() + offsets_[k], rows, cols);
    }

    double evaluate(std::span<const double> theta, std::vector<double>* grad) const {
        const Index n = w_.y.size();
        const std::size_t sites = shapes_.size();
        std::vector<Mat> left(sites + 1);
        left[0] = Mat::Ones(n, 1);
        for (std::size_t k = 0; k < sites; ++k) {
            const CoreShape& c = shapes_[k];
            const Mat half = left[k] * core(theta, k, c.left, c.dim * c.right);  // n x (d r')
            Mat next = Mat::Zero(n, c.right);
            for (Index p = 0; p < c.dim; ++p)
                next += w_.s.col(p).asDiagonal() * half.middleCols(p * c.right, c.right);
            left[k + 1] = std::move(next);
        }
        const Eigen::VectorXd z = left[sites].col(0);
        Eigen::VectorXd residual(n), weight(n);
        for (Index i = 0; i < n; ++i) {
            residual(i) = apply(f_, z(i)) - w_.y(i);
            weight(i) = residual(i) * derivative(f_, z(i));
        }
        const double mse = residual.squaredNorm() / static_cast<double>(n);
        if (grad == nullptr) return mse;

        grad->assign(static_cast<std::size_t>(parameters()), 0.0);
        weight *= 2.0 / static_cast<double>(n);
        Mat right = Mat::Ones(n, 1);
        for (std::size_t k = sites; k-- > 0;) {
            const CoreShape& c = shapes_[k];
            Eigen::Map<Mat> g(grad->data() + offsets_[k], c.left, c.dim * c.right);
            for (Index p = 0; p < c.dim; ++p) {
                const Eigen::VectorXd wp = weight.cwiseProduct(w_.s.col(p));
                g.middleCols(p * c.right, c.right).noalias() = left[k].transpose() * wp.asDiagonal() * right;
            }
            if (k == 0) break;
            const Mat u = right * core(theta, k, c.left * c.dim, c.right).transpose();  // n x (r d)
            Mat next = Mat::Zero(n, c.left);
            for (Index a = 0; a < c.left; ++a)
                for (Index p = 0; p < c.dim; ++p) next.col(a) += w_.s.col(p).cwiseProduct(u.col(a * c.dim + p));
            right = std::move(next);
        }
        return mse;
    }

    std::vector<CoreShape> shapes_;
    const Windows& w_;
    Nonlinearity f_;
    std::vector<Index> offsets_;
};

std::vector<CoreShape> model_shapes(int lag, int order, Index bond) {
    std::vector<CoreShape> shapes;
    for (int k = 0; k < order; ++k)
        shapes.push_back({k == 0 ? 1 : bond, lag + 1, k == order - 1 ? 1 : bond});
    return shapes;
}

TTState to_tt(const std::vector<CoreShape>& shapes, std::span<const double> theta) {
    TTState tt;
    std::size_t offset = 0;
    for (const CoreShape& c : shapes) {
        const auto size = static_cast<std::size_t>(c.size());
        tt.cores.emplace_back(Shape{c.left, c.dim, c.right},
                              std::vector<double>(theta.begin() + static_cast<std::ptrdiff_t>(offset),
                                                  theta.begin() + static_cast<std::ptrdiff_t>(offset + size)));
        offset += size;
    }
    return tt;
}

double squared(std::span<const double> v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); }

struct RunResult {
    std::vector<double> theta;
    double loss = std::numeric_limits<double>::infinity();
    std::vector<double> loss_curve;
    double gradient_check = 0.0;
    int iterations = 0;
};

// Accelerated gradient descent: Armijo backtracking from the extrapolated
// point, momentum restart whenever a step would raise the loss.
RunResult run_descent(const TTObjective& objective, const std::vector<CoreShape>& shapes, Index bond,
                      std::uint64_t seed, const FitOptions& opts) {
    Rng rng(seed);
    const Index n_params = objective.parameters();
    RunResult out;
    std::vector<double> x(static_cast<std::size_t>(n_params));
    {
        std::size_t i = 0;
        for (const CoreShape& c : shapes) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(c.dim * bond));
            for (Index k = 0; k < c.size(); ++k) x[i++] = rng.normal() * scale;
        }
    }

    std::vector<double> gx;
    double lx = objective.loss_gradient(x, gx);
    if (!std::isfinite(lx)) throw NumericalError("training loss is not finite at initialization");

    const double h = opts.finite_difference_step;
    for (int k = 0; k < opts.gradient_check_parameters && n_params > 0; ++k) {
        const auto idx = static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(n_params));
        std::vector<double> probe = x;
        probe[idx] = x[idx] + h;
        const double up = objective.loss(probe);
        probe[idx] = x[idx] - h;
        const double down = objective.loss(probe);
        const double fd = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(gx[idx]), 1e-8});
        out.gradient_check = std::max(out.gradient_check, std::abs(fd - gx[idx]) / scale);
    }

    out.loss_curve.push_back(lx);
    std::vector<double> y = x, gy = gx, xn(x.size()), gn;
    double ly = lx, step = 1.0, tk = 1.0;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const double gy2 = squared(gy);
        if (gy2 == 0.0 || lx == 0.0) break;
        double ln = 0.0;
        bool accepted = false;
        while (step >= 1e-30) {
            for (std::size_t i = 0; i < x.size(); ++i) xn[i] = y[i] - step * gy[i];
            ln = objective.loss_gradient(xn, gn);
            if (std::isfinite(ln) && ln <= ly - 0.5 * step * gy2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (ln > lx) {
            tk = 1.0;
            y = x;
            gy = gx;
            ly = lx;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        const double momentum = (tk - 1.0) / tn;
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = xn[i] + momentum * (xn[i] - x[i]);
        x.swap(xn);
        gx.swap(gn);
        lx = ln;
        tk = tn;
        out.loss_curve.push_back(lx);
        ly = objective.loss_gradient(y, gy);
        if (!std::isfinite(ly)) {
            // extrapolated point blew up; fall back to plain descent from x
            tk = 1.0;
            y = x;
            gy = gx;
            ly = lx;
        }
        step *= 1.2;
    }
    if (!std::isfinite(lx)) throw NumericalError("training loss became non-finite");
    out.theta = std::move(x);
    out.loss = lx;
    out.iterations = it;
    return out;
}

}  // namespace

SeriesDataset generate_hnd(const Truth& truth, std::span<const double> init, Index T, double noise_std,
                           std::uint64_t seed, Nonlinearity f) {
    const int lag = static_cast<int>(init.size());
    if (T <= lag) throw ValidationError("T must exceed L = " + std::to_string(lag));
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ValidationError("noise_std must be finite and >= 0");
    int order = 0;
    if (const auto* c = std::get_if<CoeffTensor>(&truth)) {
        if (c->spec().lag != lag)
            throw ValidationError("truth has L = " + std::to_string(c->spec().lag) + " but " + std::to_string(lag) +
                                  " initial values were given");
        order = c->spec().order;
    } else {
        const auto& tt = std::get<TTState>(truth);
        check_tt_truth(tt, lag);
        order = static_cast<int>(tt.sites());
    }
    for (std::size_t k = 0; k < init.size(); ++k)
        if (!std::isfinite(init[k])) throw ValidationError("initial value " + std::to_string(k + 1) + " is not finite");

    SeriesDataset data;
    data.lag = lag;
    data.order = order;
    data.noise_std = noise_std;
    data.seed = seed;
    data.nonlinearity = f;
    data.values.assign(init.begin(), init.end());
    data.values.reserve(static_cast<std::size_t>(T));
    Rng rng(seed);
    for (Index t = lag; t < T; ++t) {
        const std::vector<double> h = lags_before(data.values, t, lag);
        double z = 0.0;
        if (const auto* c = std::get_if<CoeffTensor>(&truth))
            z = evaluate(*c, h);
        else
            z = tt_contract_history(std::get<TTState>(truth), history_vector(h));
        double x = apply(f, z);
        if (noise_std > 0.0) x += noise_std * rng.normal();
        check_step(x, t + 1);
        data.values.push_back(x);
    }
    return data;
}

LossGradient tt_loss_gradient(const TTState& model, std::span<const double> values, int lag, Index begin, Index end,
                              Nonlinearity f) {
    check_tt_truth(model, lag);
    if (begin < lag || end > static_cast<Index>(values.size()) || begin >= end)
        throw ValidationError("window range out of bounds");
    std::vector<CoreShape> shapes;
    std::vector<double> theta;
    for (const Tensor& c : model.cores) {
        shapes.push_back({c.extent(0), c.extent(1), c.extent(2)});
        theta.insert(theta.end(), c.data().begin(), c.data().end());
    }
    const Windows w = make_windows(values, lag, begin, end);
    const TTObjective objective(shapes, w, f);
    LossGradient out;
    out.loss = objective.loss_gradient(theta, out.gradient);
    return out;
}

std::pair<TTState, FitReport> fit_tt_model(const SeriesDataset& data, int lag, int order, Index bond,
                                            const FitOptions& opts) {
    data.validate();
    if (bond < 1) throw ValidationError("bond dimension D must be >= 1");
    if (lag < 0 || order < 1) throw ValidationError("fit needs L >= 0 and P >= 1");
    if (data.length() <= lag) throw ValidationError("series is shorter than the lag window");
    if (opts.max_iterations < 0) throw ValidationError("max_iterations must be >= 0");
    if (!(opts.validation_fraction >= 0.0 && opts.validation_fraction < 1.0))
        throw ValidationError("validation_fraction must be in [0, 1)");
    if (opts.restarts < 1) throw ValidationError("restarts must be >= 1");
    if (opts.jobs < 1) throw ValidationError("jobs must be >= 1");
    if (!(opts.finite_difference_step > 0.0)) throw ValidationError("finite-difference step must be positive");

    const Index windows = data.length() - lag;
    const auto held_out = static_cast<Index>(std::floor(opts.validation_fraction * static_cast<double>(windows)));
    const Index train = windows - held_out;
    if (train < 1) throw ValidationError("no training windows left after the validation split");

    const std::vector<CoreShape> shapes = model_shapes(lag, order, bond);
    const Windows train_w = make_windows(data.values, lag, lag, lag + train);
    const TTObjective objective(shapes, train_w, opts.nonlinearity);

    FitReport report;
    report.nonlinearity = opts.nonlinearity;
    report.parameter_count = objective.parameters();
    report.train_samples = train;
    report.validation_samples = held_out;
    if (train < 10 * report.parameter_count)
        report.warnings.push_back("only " + std::to_string(train) + " training windows for " +
                                  std::to_string(report.parameter_count) + " parameters (10x recommended)");

    Rng master(opts.seed);
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < opts.restarts; ++k) seeds.push_back(master.next_u64());
    std::vector<RunResult> runs(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    auto work = [&](std::size_t k) {
        try {
            runs[k] = run_descent(objective, shapes, bond, seeds[k], opts);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const auto jobs = static_cast<std::size_t>(std::min<int>(opts.jobs, opts.restarts));
    if (jobs <= 1) {
        for (std::size_t k = 0; k < seeds.size(); ++k) work(k);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j)
            pool.emplace_back([&, j] {
                for (std::size_t k = j; k < seeds.size(); k += jobs) work(k);
            });
        for (std::thread& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::size_t best = 0;
    for (std::size_t k = 1; k < runs.size(); ++k)
        if (runs[k].loss < runs[best].loss) best = k;
    RunResult& winner = runs[best];

    report.loss_curve = std::move(winner.loss_curve);
    report.train_rmse = std::sqrt(winner.loss);
    report.gradient_check = winner.gradient_check;
    report.iterations = winner.iterations;
    report.restart = static_cast<int>(best);
    if (held_out > 0) {
        const Windows val_w = make_windows(data.values, lag, lag + train, data.length());
        report.validation_rmse = std::sqrt(TTObjective(shapes, val_w, opts.nonlinearity).loss(winner.theta));
    } else {
        report.validation_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    return {to_tt(shapes, winner.theta), std::move(report)};
}

double predict_next(const TTState& model, std::span<const double> history, Nonlinearity f) {
    const int lag = static_cast<int>(history.size());
    check_tt_truth(model, lag);
    std::vector<double> h(history.rbegin(), history.rend());
    return apply(f, tt_contract_history(model, history_vector(h)));
}

std::vector<double> forecast(const TTState& model, std::span<const double> history, Index horizon, Nonlinearity f) {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    const int lag = static_cast<int>(history.size());
    check_tt_truth(model, lag);
    std::vector<double> window(history.begin(), history.end());
    std::vector<double> out;
    for (Index k = 0; k < horizon; ++k) {
        const std::span<const double> recent(window.data() + window.size() - static_cast<std::size_t>(lag),
                                             static_cast<std::size_t>(lag));
        const double x = predict_next(model, recent, f);
        check_step(x, k + 1);
        out.push_back(x);
        window.push_back(x);
    }
    return out;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size())
        throw ValidationError("rmse needs equal lengths, got " + std::to_string(pred.size()) + " and " +
                              std::to_string(truth.size()));
    if (pred.empty()) throw ValidationError("rmse of an empty sequence");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return std::sqrt(s / static_cast<double>(pred.size()));
}

}  // namespace tnpoly
