#include "ergonash/cli.hpp"

int main(int argc, char** argv) { return ergonash::cli_main(argc, argv); }
