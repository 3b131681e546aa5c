#include "bldg/cli.hpp"

int main(int argc, char** argv) { return bldg::run_cli(argc, argv); }
