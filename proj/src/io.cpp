#include "tnpoly/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tnpoly::io {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void dump_to(std::string& out, const Json& j, int indent, int depth) {
    const bool pretty = indent >= 0;
    auto newline = [&](int level) {
        if (!pretty) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * level), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                out += Json(key).dump();
                out += pretty ? ": " : ":";
                dump_to(out, value, indent, depth + 1);
            }
            newline(depth);
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // arrays of scalars stay on one line
            bool flat = true;
            for (const auto& v : j)
                if (v.is_structured()) flat = false;
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += flat && pretty ? ", " : ",";
                first = false;
                if (!flat) newline(depth + 1);
                dump_to(out, v, indent, depth + 1);
            }
            if (!flat) newline(depth);
            out += ']';
            return;
        }
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? format_double(x) : "null";
            return;
        }
        default: out += j.dump(); return;
    }
}

const Json& require(const Json& j, const char* key) {
    if (!j.is_object()) throw ValidationError("expected a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing JSON key \"") + key + "\"");
    return *it;
}

template <class T>
T get(const Json& j, const char* key) {
    const Json& v = require(j, key);
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("JSON key \"") + key + "\" has the wrong type");
    }
}

std::vector<double> doubles(const Json& v, const std::string& what) {
    if (!v.is_array()) throw ValidationError(what + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) throw ValidationError(what + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Shape shape_of(const Json& v, const std::string& what) {
    if (!v.is_array()) throw ValidationError(what + " must be an array of integers");
    Shape out;
    for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<std::int64_t>() < 0)
            throw ValidationError(what + " must be an array of non-negative integers");
        out.push_back(x.get<Index>());
    }
    return out;
}

Json array_of(std::span<const double> v) {
    Json out = Json::array();
    for (double x : v) out.push_back(x);
    return out;
}

Json array_of(const Shape& v) {
    Json out = Json::array();
    for (Index x : v) out.push_back(x);
    return out;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    dump_to(out, j, indent, 0);
    if (indent >= 0) out += '\n';
    return out;
}

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(what + ": malformed JSON (byte " + std::to_string(e.byte) + ")");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << content;
    if (!out) throw ValidationError("failed writing " + path);
}

Json to_json(const CoeffTensor& c) {
    Json j;
    j["rep"] = to_string(c.spec().rep);
    j["L"] = c.spec().lag;
    j["P"] = c.spec().order;
    j["shape"] = array_of(c.tensor().shape());
    j["data"] = array_of(c.tensor().data());
    return j;
}

CoeffTensor coeff_tensor_from_json(const Json& j) {
    ProblemSpec spec;
    spec.rep = representation_from_string(get<std::string>(j, "rep"));
    spec.lag = get<int>(j, "L");
    spec.order = get<int>(j, "P");
    if (spec.lag < 0 || spec.order < 0) throw ValidationError("L and P must be non-negative");
    const Shape shape = shape_of(require(j, "shape"), "shape");
    if (shape != spec.shape())
        throw ValidationError("shape " + shape_string(shape) + " does not match " + to_string(spec.rep) +
                              " L=" + std::to_string(spec.lag) + " P=" + std::to_string(spec.order) + ", expected " +
                              shape_string(spec.shape()));
    std::vector<double> data = doubles(require(j, "data"), "data");
    if (static_cast<Index>(data.size()) != shape_size(shape))
        throw ValidationError("data has " + std::to_string(data.size()) + " entries, shape needs " +
                              std::to_string(shape_size(shape)));
    return CoeffTensor(spec, Tensor(shape, std::move(data)));
}

Json to_json(const TTState& tt) {
    Json j;
    Shape dims = tt.dims();
    Shape ranks = tt.ranks();
    j["dims"] = array_of(dims);
    j["ranks"] = array_of(ranks);
    Json cores = Json::array();
    for (const Tensor& c : tt.cores) cores.push_back(array_of(c.data()));
    j["cores"] = std::move(cores);
    return j;
}

TTState tt_from_json(const Json& j) {
    const Shape dims = shape_of(require(j, "dims"), "dims");
    const Shape ranks = shape_of(require(j, "ranks"), "ranks");
    const Json& cores = require(j, "cores");
    if (!cores.is_array()) throw ValidationError("cores must be an array");
    if (ranks.size() != dims.size() + 1 || cores.size() != dims.size())
        throw ValidationError("TT JSON needs n dims, n+1 ranks and n cores");
    TTState tt;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const Shape shape{ranks[k], dims[k], ranks[k + 1]};
        std::vector<double> data = doubles(cores[k], "core " + std::to_string(k));
        if (static_cast<Index>(data.size()) != shape_size(shape))
            throw ValidationError("core " + std::to_string(k) + " has " + std::to_string(data.size()) +
                                  " entries, expected " + std::to_string(shape_size(shape)));
        tt.cores.emplace_back(shape, std::move(data));
    }
    tt.validate();
    return tt;
}

Json to_json(const TreeNetwork& net) {
    Json j;
    j["depth"] = net.depth;
    j["leaf_dim"] = net.leaf_dim;
    j["channel_dims"] = array_of(net.channel_dims);
    j["nonlinearity"] = to_string(net.nonlinearity);
    j["layout"] = to_string(net.layout);
    Json levels = Json::array();
    for (const auto& level : net.levels) {
        Json tensors = Json::array();
        for (const Tensor& t : level) tensors.push_back(array_of(t.data()));
        levels.push_back(std::move(tensors));
    }
    j["levels"] = std::move(levels);
    j["top"] = array_of(net.top.data());
    return j;
}

TreeNetwork tree_from_json(const Json& j) {
    TreeNetwork net;
    net.depth = get<int>(j, "depth");
    net.leaf_dim = get<Index>(j, "leaf_dim");
    net.channel_dims = shape_of(require(j, "channel_dims"), "channel_dims");
    net.nonlinearity = nonlinearity_from_string(get<std::string>(j, "nonlinearity"));
    net.layout = representation_from_string(get<std::string>(j, "layout"));
    if (net.depth < 1 || net.depth > 20) throw ValidationError("tree depth must be in [1, 20]");
    if (static_cast<int>(net.channel_dims.size()) != net.depth - 1)
        throw ValidationError("channel_dims needs depth-1 entries");
    const Json& levels = require(j, "levels");
    if (!levels.is_array() || static_cast<int>(levels.size()) != net.depth - 1)
        throw ValidationError("levels needs depth-1 entries");
    for (int l = 0; l + 1 < net.depth; ++l) {
        const Shape shape{net.child_dim(l), net.child_dim(l), net.channel_dims[static_cast<std::size_t>(l)]};
        std::vector<Tensor> level;
        const Json& tensors = levels[static_cast<std::size_t>(l)];
        if (!tensors.is_array()) throw ValidationError("each level must be an array of tensors");
        for (const auto& t : tensors) {
            std::vector<double> data = doubles(t, "level tensor");
            if (static_cast<Index>(data.size()) != shape_size(shape))
                throw ValidationError("level " + std::to_string(l) + " tensor needs " +
                                      std::to_string(shape_size(shape)) + " entries");
            level.emplace_back(shape, std::move(data));
        }
        net.levels.push_back(std::move(level));
    }
    const Index c = net.child_dim(net.depth - 1);
    std::vector<double> top = doubles(require(j, "top"), "top");
    if (static_cast<Index>(top.size()) != c * c) throw ValidationError("top needs " + std::to_string(c * c) + " entries");
    net.top = Tensor({c, c}, std::move(top));
    net.validate();
    return net;
}

Json to_json(const TcnWeights& w) {
    Json j;
    j["a1"] = w.first[0][0];
    j["a2"] = w.first[0][1];
    j["b1"] = w.first[1][0];
    j["b2"] = w.first[1][1];
    j["c1"] = w.top[0];
    j["c2"] = w.top[1];
    j["epsilon"] = w.epsilon;
    j["nonlinearity"] = to_string(w.nonlinearity);
    return j;
}

TcnWeights tcn_weights_from_json(const Json& j) {
    TcnWeights w;
    w.first[0] = {get<double>(j, "a1"), get<double>(j, "a2")};
    w.first[1] = {get<double>(j, "b1"), get<double>(j, "b2")};
    w.top = {get<double>(j, "c1"), get<double>(j, "c2")};
    if (j.contains("epsilon")) w.epsilon = get<double>(j, "epsilon");
    if (j.contains("nonlinearity")) w.nonlinearity = nonlinearity_from_string(get<std::string>(j, "nonlinearity"));
    return w;
}

Json classification_json(const EEProfile& profile) {
    Json j;
    j["class"] = profile.scaling_class ? to_string(*profile.scaling_class) : "Unclassified";
    Json residuals = Json::object(), coefficients = Json::object(), scores = Json::object();
    if (profile.fit) {
        for (const ModelFit& m : profile.fit->models) {
            residuals[m.name] = m.residual;
            coefficients[m.name] = array_of(m.coefficients);
            scores[m.name] = m.score;
        }
    }
    j["residuals"] = std::move(residuals);
    j["coefficients"] = std::move(coefficients);
    j["scores"] = std::move(scores);
    if (profile.fit) {
        j["penalty_factor"] = profile.fit->penalty_factor;
        j["penalty_scale"] = profile.fit->penalty_scale;
    }
    j["replica_cut_ambiguous"] = profile.replica_cut_ambiguous;
    return j;
}

Json to_json(const FitReport& r) {
    Json j;
    j["nonlinearity"] = to_string(r.nonlinearity);
    j["parameter_count"] = r.parameter_count;
    j["train_samples"] = r.train_samples;
    j["validation_samples"] = r.validation_samples;
    j["iterations"] = r.iterations;
    j["restart"] = r.restart;
    j["train_rmse"] = r.train_rmse;
    j["validation_rmse"] = r.validation_rmse;
    j["gradient_check"] = r.gradient_check;
    Json warnings = Json::array();
    for (const auto& w : r.warnings) warnings.push_back(w);
    j["warnings"] = std::move(warnings);
    j["loss_curve"] = array_of(r.loss_curve);
    return j;
}

namespace {

void append_comment(std::string& out, const std::string& comment) {
    if (comment.empty()) return;
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) out += "# " + line + '\n';
}

}  // namespace

std::string series_csv(const SeriesDataset& data, const std::string& comment) {
    std::string out;
    append_comment(out, comment);
    out += "t,x\n";
    for (std::size_t t = 0; t < data.values.size(); ++t)
        out += std::to_string(t + 1) + ',' + format_double(data.values[t]) + '\n';
    return out;
}

SeriesDataset series_from_csv(const std::string& text) {
    SeriesDataset data;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "t,x") throw ValidationError("series CSV must start with the header t,x");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("series CSV line " + std::to_string(line_no) + " has no comma");
        const std::string field = line.substr(comma + 1);
        char* end = nullptr;
        const double x = std::strtod(field.c_str(), &end);
        if (end == field.c_str() || *end != '\0')
            throw ValidationError("series CSV line " + std::to_string(line_no) + ": '" + field + "' is not a number");
        data.values.push_back(x);
    }
    if (!header) throw ValidationError("series CSV is empty");
    return data;
}

std::string ee_profile_csv(const EEProfile& profile, const std::string& comment) {
    std::string out;
    append_comment(out, comment);
    out += "cut,entropy_nats,bound_nats\n";
    for (std::size_t k = 0; k < profile.entropies.size(); ++k)
        out += std::to_string(k + 1) + ',' + format_double(profile.entropies[k]) + ',' +
               format_double(profile.bounds[k]) + '\n';
    return out;
}

}  // namespace tnpoly::io
