#include "embedopt/cli.hpp"

int main(int argc, char** argv) { return embedopt::run_cli(argc, argv); }
