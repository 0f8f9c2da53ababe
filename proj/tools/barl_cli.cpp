#include "barl/cli.hpp"

int main(int argc, char** argv) { return barl::cli_main(argc, argv); }
