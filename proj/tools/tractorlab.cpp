#include "tractorlab/cli.hpp"

int main(int argc, char** argv) { return tractorlab::run_cli(argc, argv); }
