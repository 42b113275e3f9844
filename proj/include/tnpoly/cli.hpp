#pragma once

namespace tnpoly::cli {

/// Runs one subcommand. Returns 0 on success, 1 on validation errors and 2 on
/// numerical failures (divergence, cap exceeded).
int run(int argc, char** argv);

}  // namespace tnpoly::cli
