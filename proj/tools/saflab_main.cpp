#include "saflab/cli.hpp"

int main(int argc, char** argv) { return saflab::run_cli(argc, argv); }
