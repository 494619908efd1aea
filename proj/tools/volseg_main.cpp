#include "volseg/cli.hpp"

int main(int argc, char** argv) { return volseg::run_cli(argc, argv); }
