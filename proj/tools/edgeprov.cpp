#include "edgeprov/cli/cli.hpp"

int main(int argc, char** argv) { return edgeprov::cli::run(argc, argv); }
