#include "upm/cli.hpp"

int main(int argc, char** argv) { return upm::cli::run_cli(argc, argv); }
