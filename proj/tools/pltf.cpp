#include "pltf/cli.hpp"

int main(int argc, char** argv) { return pltf::run_cli(argc, argv); }
