#include "fuseflow/cli.hpp"

int main(int argc, char** argv) { return fuseflow::cli::main(argc, argv); }
