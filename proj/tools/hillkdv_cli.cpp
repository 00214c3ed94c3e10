#include "hillkdv/cli.hpp"

int main(int argc, char** argv) { return hillkdv::run_cli(argc, argv); }
