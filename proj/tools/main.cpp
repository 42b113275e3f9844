#include "tnpoly/cli.hpp"

int main(int argc, char** argv) { return tnpoly::cli::run(argc, argv); }
