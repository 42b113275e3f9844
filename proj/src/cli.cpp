#include "tnpoly/cli.hpp"

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tnpoly/dynamics_lab.hpp"
#include "tnpoly/entanglement.hpp"
#include "tnpoly/io.hpp"
#include "tnpoly/mera_model.hpp"
#include "tnpoly/problem_space.hpp"
#include "tnpoly/random.hpp"
#include "tnpoly/tensor_train.hpp"

namespace tnpoly::cli {

namespace {

using io::Json;

constexpr const char* kVersion = TNPOLY_VERSION;

struct Config {
    std::string input;
    std::string output;
    std::string report;
    std::string model;
    std::string truth;
    std::string truth_out;
    std::string tree_out;
    int lag = 3;
    int order = 3;
    Index bond = 2;
    Index max_rank = kUnboundedRank;
    double tol = 0.0;
    std::optional<std::uint64_t> seed;
    std::string nonlinearity = "tanh";
    double penalty = kDefaultComplexityPenalty;
    Index length = 200;
    double noise = 0.0;
    double scale = 1.0;
    std::vector<double> init;
    std::vector<double> history;
    Index horizon = 20;
    int iterations = 5000;
    int restarts = 1;
    int jobs = 1;
    double validation = 0.2;
    int samples = 1000;
};

std::uint64_t require_seed(const Config& c, const std::string& command) {
    if (!c.seed) throw ValidationError(command + " is stochastic and needs --seed");
    return *c.seed;
}

Json provenance(const std::string& command, Json config) {
    Json p;
    p["tool"] = "tnpoly";
    p["version"] = kVersion;
    p["command"] = command;
    p["config"] = std::move(config);
    return p;
}

// One-line provenance for CSV and text outputs.
std::string provenance_comment(const std::string& command, const Json& config) {
    return std::string("tnpoly ") + kVersion + " " + command + " " + io::dump_json(config, -1);
}

Json with_provenance(Json body, const std::string& command, const Json& config) {
    body["provenance"] = provenance(command, config);
    return body;
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty())
        std::cout << content;
    else
        io::write_file(path, content);
}

std::string path_or_stdout(const std::string& p) { return p.empty() ? "-" : p; }

CoeffTensor read_tensor(const std::string& path) {
    return io::coeff_tensor_from_json(io::parse_json(io::read_file(path), path));
}

Json rank_value(Index r) { return r == kUnboundedRank ? Json(nullptr) : Json(r); }

int cmd_dims(const Config& c) {
    if (c.lag < 0 || c.order < 0) throw ValidationError("L and P must be non-negative");
    if (c.bond < 1) throw ValidationError("D must be >= 1");
    Json config{{"L", c.lag}, {"P", c.order}, {"D", c.bond}};
    std::string out = "# " + provenance_comment("dims", config) + "\n";
    out += "full " + std::to_string(full_dimension({c.lag, c.order, Representation::Original})) + "\n";
    out += "symmetric " + std::to_string(symmetric_dimension(c.lag, c.order)) + "\n";
    out += "dual " + std::to_string(full_dimension({c.lag, c.order, Representation::Dual})) + "\n";
    out += "tt_parameter_bound " + std::to_string(tt_parameter_bound(c.lag, c.order, c.bond)) + "\n";
    emit(c.output, out);
    return 0;
}

int cmd_transform(const Config& c, const std::string& command) {
    const CoeffTensor in = read_tensor(c.input);
    CoeffTensor out = command == "symmetrize" ? symmetrize(in) : command == "to-dual" ? to_dual(in) : from_dual(in);
    Json config{{"input", c.input}, {"output", path_or_stdout(c.output)}};
    emit(c.output, io::dump_json(with_provenance(io::to_json(out), command, config)));
    return 0;
}

int cmd_ee(const Config& c) {
    const CoeffTensor in = read_tensor(c.input);
    const EEProfile profile = ee_profile(in, c.penalty);
    Json config{{"input", c.input},
                {"output", path_or_stdout(c.output)},
                {"report", path_or_stdout(c.report)},
                {"penalty", c.penalty}};
    emit(c.output, io::ee_profile_csv(profile, provenance_comment("ee", config)));
    emit(c.report, io::dump_json(with_provenance(io::classification_json(profile), "ee", config)));
    return 0;
}

int cmd_tt(const Config& c) {
    if (c.max_rank < 1) throw ValidationError("--rank must be >= 1");
    if (!(c.tol >= 0.0)) throw ValidationError("--tol must be >= 0");
    const CoeffTensor in = read_tensor(c.input);
    auto [tt, truncation] = tt_decompose_reported(in.tensor(), c.max_rank, c.tol);
    const Tensor back = tt_reconstruct(tt);
    Json config{{"input", c.input},
                {"output", path_or_stdout(c.output)},
                {"report", path_or_stdout(c.report)},
                {"rank", rank_value(c.max_rank)},
                {"tol", c.tol}};
    Json report;
    report["relative_error"] = relative_error(back, in.tensor());
    Json discarded = Json::array();
    for (double d : truncation.discarded) discarded.push_back(d);
    report["discarded"] = std::move(discarded);
    report["discarded_total"] = truncation.total();
    Json ranks = Json::array();
    for (Index r : tt.ranks()) ranks.push_back(r);
    report["ranks"] = std::move(ranks);
    report["parameter_count"] = tt_parameter_count(tt);
    Json entropies = Json::array();
    if (tt.sites() > 1 && tt_norm(tt) > 0.0)
        for (double s : tt_cut_entropies(tt)) entropies.push_back(s);
    report["bond_entropies"] = std::move(entropies);
    emit(c.output, io::dump_json(with_provenance(io::to_json(tt), "tt", config)));
    emit(c.report, io::dump_json(with_provenance(std::move(report), "tt", config)));
    return 0;
}

Json series_config(const Config& c) {
    Json j{{"L", c.lag}, {"P", c.order}, {"D", c.bond}, {"T", c.length}, {"noise", c.noise}, {"scale", c.scale},
           {"F", c.nonlinearity}, {"seed", *c.seed}, {"truth", c.truth.empty() ? "random_tt" : c.truth}};
    return j;
}

int cmd_gen(Config c) {
    const std::uint64_t seed = require_seed(c, "gen");
    const Nonlinearity f = nonlinearity_from_string(c.nonlinearity);
    Rng setup(seed);
    const std::uint64_t truth_seed = setup.next_u64();
    const std::uint64_t noise_seed = setup.next_u64();

    std::optional<Truth> truth;
    if (!c.truth.empty()) {
        const Json j = io::parse_json(io::read_file(c.truth), c.truth);
        if (j.contains("cores")) {
            TTState tt = io::tt_from_json(j);
            c.order = static_cast<int>(tt.sites());
            c.lag = static_cast<int>(tt.dims().front()) - 1;
            truth = tt_scaled(std::move(tt), c.scale);
        } else {
            CoeffTensor w = io::coeff_tensor_from_json(j);
            c.lag = w.spec().lag;
            c.order = w.spec().order;
            w.tensor() *= c.scale;
            truth = std::move(w);
        }
    } else {
        if (c.lag < 0 || c.order < 1 || c.bond < 1) throw ValidationError("random truth needs L >= 0, P >= 1, D >= 1");
        truth = tt_scaled(random_tt(c.order, c.lag + 1, c.bond, truth_seed), c.scale);
    }
    if (c.init.empty())
        for (int k = 0; k < c.lag; ++k) c.init.push_back(setup.uniform(-0.5, 0.5));
    if (static_cast<int>(c.init.size()) != c.lag)
        throw ValidationError("--init needs L = " + std::to_string(c.lag) + " values");

    const SeriesDataset data = generate_hnd(*truth, c.init, c.length, c.noise, noise_seed, f);
    Json config = series_config(c);
    Json init = Json::array();
    for (double x : c.init) init.push_back(x);
    config["init"] = std::move(init);
    config["output"] = path_or_stdout(c.output);
    if (!c.truth_out.empty()) {
        config["truth_out"] = c.truth_out;
        Json body = std::holds_alternative<TTState>(*truth) ? io::to_json(std::get<TTState>(*truth))
                                                            : io::to_json(std::get<CoeffTensor>(*truth));
        io::write_file(c.truth_out, io::dump_json(with_provenance(std::move(body), "gen", config)));
    }
    emit(c.output, io::series_csv(data, provenance_comment("gen", config)));
    return 0;
}

int cmd_fit(const Config& c) {
    const std::uint64_t seed = require_seed(c, "fit");
    SeriesDataset data = io::series_from_csv(io::read_file(c.input));
    data.lag = c.lag;
    data.order = c.order;
    FitOptions opts;
    opts.max_iterations = c.iterations;
    opts.nonlinearity = nonlinearity_from_string(c.nonlinearity);
    opts.seed = seed;
    opts.validation_fraction = c.validation;
    opts.restarts = c.restarts;
    opts.jobs = c.jobs;
    auto [model, report] = fit_tt_model(data, c.lag, c.order, c.bond, opts);
    // --jobs changes wall time only, so it stays out of the config
    Json config{{"input", c.input},
                {"output", path_or_stdout(c.output)},
                {"report", path_or_stdout(c.report)},
                {"L", c.lag},
                {"P", c.order},
                {"D", c.bond},
                {"F", c.nonlinearity},
                {"seed", seed},
                {"iterations", c.iterations},
                {"restarts", c.restarts},
                {"validation", c.validation}};
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    emit(c.output, io::dump_json(with_provenance(io::to_json(model), "fit", config)));
    emit(c.report, io::dump_json(with_provenance(io::to_json(report), "fit", config)));
    return 0;
}

int cmd_forecast(const Config& c) {
    const TTState model = io::tt_from_json(io::parse_json(io::read_file(c.model), c.model));
    const int lag = static_cast<int>(model.dims().front()) - 1;
    std::vector<double> history = c.history;
    if (!c.input.empty()) {
        if (!history.empty()) throw ValidationError("give either --history or --series, not both");
        const SeriesDataset s = io::series_from_csv(io::read_file(c.input));
        if (static_cast<int>(s.values.size()) < lag) throw ValidationError("series is shorter than L");
        history.assign(s.values.end() - lag, s.values.end());
    }
    if (static_cast<int>(history.size()) != lag)
        throw ValidationError("model has L = " + std::to_string(lag) + " but the history has " +
                              std::to_string(history.size()) + " values");
    const std::vector<double> path = forecast(model, history, c.horizon, nonlinearity_from_string(c.nonlinearity));
    Json hist = Json::array();
    for (double x : history) hist.push_back(x);
    Json config{{"model", c.model}, {"series", c.input.empty() ? Json(nullptr) : Json(c.input)},
                {"history", std::move(hist)}, {"horizon", c.horizon}, {"F", c.nonlinearity},
                {"output", path_or_stdout(c.output)}};
    std::string out = "# " + provenance_comment("forecast", config) + "\nstep,x\n";
    for (std::size_t k = 0; k < path.size(); ++k) out += std::to_string(k + 1) + "," + io::format_double(path[k]) + "\n";
    emit(c.output, out);
    return 0;
}

int cmd_tcn_check(const Config& c) {
    const std::uint64_t seed = require_seed(c, "tcn-check");
    if (c.samples < 1) throw ValidationError("--samples must be >= 1");
    const TcnWeights w = io::tcn_weights_from_json(io::parse_json(io::read_file(c.input), c.input));
    const TreeNetwork net = tcn_tensors(w);
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < c.samples; ++k) {
        std::array<double, 4> h{};
        for (double& x : h) x = rng.uniform(-1.0, 1.0);
        const auto leaves = power_basis_inputs(h, net.leaf_dim);
        worst = std::max(worst, std::abs(tree_forward(net, leaves) - tcn_forward(w, h)));
    }
    Json config{{"input", c.input}, {"samples", c.samples}, {"seed", seed},
                {"output", path_or_stdout(c.output)}};
    if (!c.tree_out.empty()) {
        config["tree_out"] = c.tree_out;
        io::write_file(c.tree_out, io::dump_json(with_provenance(io::to_json(net), "tcn-check", config)));
    }
    Json report{{"epsilon", w.epsilon},
                {"nonlinearity", to_string(w.nonlinearity)},
                {"lambda", saturation_constant(w.nonlinearity, w.epsilon)},
                {"max_abs_deviation", worst},
                {"tolerance", 10.0 * w.epsilon},
                {"equivalent", worst < 10.0 * w.epsilon}};
    emit(c.output, io::dump_json(with_provenance(std::move(report), "tcn-check", config)));
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Tensor-network tools for order-P lag-L polynomial dynamics", "tnpoly"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    Config c;

    auto add_io = [&](CLI::App* sub, const char* in_help) {
        sub->add_option("--in", c.input, in_help)->required()->check(CLI::ExistingFile);
        sub->add_option("--out", c.output, "output file (stdout when omitted)");
    };
    auto add_f = [&](CLI::App* sub) {
        sub->add_option("--F", c.nonlinearity, "nonlinearity: identity|tanh|sigmoid")->capture_default_str();
    };

    auto* dims = app.add_subcommand("dims", "full, symmetric, dual and TT parameter counts");
    dims->add_option("--L", c.lag, "lag L")->required();
    dims->add_option("--P", c.order, "order P")->required();
    dims->add_option("--D", c.bond, "bond dimension for the TT bound")->capture_default_str();
    dims->add_option("--out", c.output, "output file (stdout when omitted)");

    auto* sym = app.add_subcommand("symmetrize", "orbit-average an original-representation tensor");
    add_io(sym, "tensor JSON");
    auto* dual = app.add_subcommand("to-dual", "original -> dual representation");
    add_io(dual, "tensor JSON");
    auto* undual = app.add_subcommand("from-dual", "dual -> original representation (equal-weight gauge)");
    add_io(undual, "tensor JSON");

    auto* ee = app.add_subcommand("ee", "entanglement profile and scaling class");
    add_io(ee, "tensor JSON");
    ee->add_option("--report", c.report, "classification JSON (stdout when omitted)");
    ee->add_option("--penalty", c.penalty, "complexity penalty factor")->capture_default_str();

    auto* tt = app.add_subcommand("tt", "tensor-train decomposition");
    add_io(tt, "tensor JSON");
    tt->add_option("--report", c.report, "error report JSON (stdout when omitted)");
    tt->add_option("--rank", c.max_rank, "maximum bond dimension");
    tt->add_option("--tol", c.tol, "relative singular value cutoff per bond")->capture_default_str();

    auto* gen = app.add_subcommand("gen", "generate a series from a truth model");
    gen->add_option("--truth", c.truth, "truth tensor or TT JSON (random TT when omitted)")->check(CLI::ExistingFile);
    gen->add_option("--L", c.lag, "lag L of the random truth")->capture_default_str();
    gen->add_option("--P", c.order, "order P of the random truth")->capture_default_str();
    gen->add_option("--D", c.bond, "bond dimension of the random truth")->capture_default_str();
    gen->add_option("--scale", c.scale, "multiplies the truth (random truths have unit norm)")->capture_default_str();
    gen->add_option("--T", c.length, "series length including the initial window")->capture_default_str();
    gen->add_option("--noise", c.noise, "noise std added after F")->capture_default_str();
    gen->add_option("--init", c.init, "initial window x_1..x_L, comma separated")->delimiter(',');
    gen->add_option("--seed", c.seed, "seed (required)");
    gen->add_option("--out", c.output, "series CSV (stdout when omitted)");
    gen->add_option("--truth-out", c.truth_out, "write the truth model used");
    add_f(gen);

    auto* fit = app.add_subcommand("fit", "fit a TT model to a series");
    add_io(fit, "series CSV");
    fit->add_option("--report", c.report, "fit report JSON (stdout when omitted)");
    fit->add_option("--L", c.lag, "lag L")->required();
    fit->add_option("--P", c.order, "order P")->required();
    fit->add_option("--D", c.bond, "bond dimension")->capture_default_str();
    fit->add_option("--seed", c.seed, "seed (required)");
    fit->add_option("--iterations", c.iterations, "iteration budget per restart")->capture_default_str();
    fit->add_option("--restarts", c.restarts, "independent initializations")->capture_default_str();
    fit->add_option("--jobs", c.jobs, "worker threads across restarts")->capture_default_str();
    fit->add_option("--validation", c.validation, "held-out trailing fraction")->capture_default_str();
    add_f(fit);

    auto* fc = app.add_subcommand("forecast", "closed-loop forecast from a TT model");
    fc->add_option("--model", c.model, "TT JSON")->required()->check(CLI::ExistingFile);
    fc->add_option("--history", c.history, "last L values, oldest first, comma separated")->delimiter(',');
    fc->add_option("--series", c.input, "series CSV whose last L values start the rollout")->check(CLI::ExistingFile);
    fc->add_option("--horizon", c.horizon, "steps to forecast")->capture_default_str();
    fc->add_option("--out", c.output, "forecast CSV (stdout when omitted)");
    add_f(fc);

    auto* tcn = app.add_subcommand("tcn-check", "compare the tree construction with the 2-layer TCN");
    add_io(tcn, "TCN weights JSON");
    tcn->add_option("--samples", c.samples, "random inputs in [-1,1]^4")->capture_default_str();
    tcn->add_option("--seed", c.seed, "seed (required)");
    tcn->add_option("--tree-out", c.tree_out, "write the constructed tree network");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (dims->parsed()) return cmd_dims(c);
        if (sym->parsed()) return cmd_transform(c, "symmetrize");
        if (dual->parsed()) return cmd_transform(c, "to-dual");
        if (undual->parsed()) return cmd_transform(c, "from-dual");
        if (ee->parsed()) return cmd_ee(c);
        if (tt->parsed()) return cmd_tt(c);
        if (gen->parsed()) return cmd_gen(c);
        if (fit->parsed()) return cmd_fit(c);
        if (fc->parsed()) return cmd_forecast(c);
        if (tcn->parsed()) return cmd_tcn_check(c);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::bad_alloc&) {
        std::cerr << "numerical error: out of memory\n";
        return 2;
    }
    return 1;
}

}  // namespace tnpoly::cli
