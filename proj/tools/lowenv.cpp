#include "lowenv/cli.hpp"

int main(int argc, char** argv) { return lowenv::cli::main(argc, argv); }
