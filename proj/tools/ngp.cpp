#include "ngp/cli.hpp"

int main(int argc, char** argv) { return ngp::cli::main(argc, argv); }
