#include "ngpf/cli.hpp"

int main(int argc, char** argv) { return ngpf::run_cli(argc, argv); }
