#include "bsodiag/cli.hpp"

int main(int argc, char** argv) { return bsodiag::run_cli(argc, argv); }
