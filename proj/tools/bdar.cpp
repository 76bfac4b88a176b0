#include "bdar/cli.hpp"

int main(int argc, char** argv) { return bdar::cli::main(argc, argv); }
