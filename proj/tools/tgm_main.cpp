#include "tgm/cli.hpp"

int main(int argc, char** argv) { return tgm::run_cli(argc, argv); }
