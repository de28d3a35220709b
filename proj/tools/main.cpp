#include "repulsion/cli.hpp"

int main(int argc, char** argv) { return repulsion::cli::run(argc, argv); }
