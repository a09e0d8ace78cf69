#include "bite/cli.hpp"

int main(int argc, char** argv) { return bite::run_cli(argc, argv); }
