#include "cabench/cli.hpp"

int main(int argc, char** argv) { return cabench::run_cli(argc, argv); }
