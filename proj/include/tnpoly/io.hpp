#pragma once

// File formats. JSON documents are built as ordered nlohmann values and
// written by dump_json, which prints every float with 17 significant digits so
// that write -> read -> write is byte-identical. CSV files may start with
// '#' comment lines.

#include <string>

#include "json.hpp"

#include "tnpoly/dynamics_lab.hpp"
#include "tnpoly/entanglement.hpp"
#include "tnpoly/mera_model.hpp"
#include "tnpoly/problem_space.hpp"
#include "tnpoly/tensor_train.hpp"

namespace tnpoly::io {

using Json = nlohmann::ordered_json;

/// Two-space indented (or single-line when indent < 0), newline-terminated
/// when indented. Non-finite floats become null.
std::string dump_json(const Json& j, int indent = 2);
/// Throws ValidationError naming `what` on malformed input.
Json parse_json(const std::string& text, const std::string& what);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// { "rep", "L", "P", "shape", "data" }
Json to_json(const CoeffTensor& c);
CoeffTensor coeff_tensor_from_json(const Json& j);

/// { "dims", "ranks", "cores" }
Json to_json(const TTState& tt);
TTState tt_from_json(const Json& j);

/// { "depth", "leaf_dim", "channel_dims", "nonlinearity", "layout", "levels", "top" }
Json to_json(const TreeNetwork& net);
TreeNetwork tree_from_json(const Json& j);

/// { "a1", "a2", "b1", "b2", "c1", "c2", "epsilon", "nonlinearity" }
Json to_json(const TcnWeights& w);
TcnWeights tcn_weights_from_json(const Json& j);

/// { "class", "residuals", "coefficients", "scores", "penalty_factor", "penalty_scale" }
Json classification_json(const EEProfile& profile);

Json to_json(const FitReport& report);

/// Header `t,x`, t counted from 1.
std::string series_csv(const SeriesDataset& data, const std::string& comment = {});
/// Reads the values only; lag/order/noise metadata is left at defaults.
SeriesDataset series_from_csv(const std::string& text);

/// Header `cut,entropy_nats,bound_nats`.
std::string ee_profile_csv(const EEProfile& profile, const std::string& comment = {});

/// "%.17g"
std::string format_double(double x);

}  // namespace tnpoly::io
