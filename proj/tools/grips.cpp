#include "grips/cli.hpp"

int main(int argc, char** argv) { return grips::run_cli(argc, argv); }
