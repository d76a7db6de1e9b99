#include "vpmpcc/cli.hpp"

int main(int argc, char** argv) { return vpmpcc::cli::run(argc, argv); }
