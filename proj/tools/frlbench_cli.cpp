#include "frlbench/cli.hpp"

int main(int argc, char** argv) { return frlbench::cli::run(argc, argv); }
