#include <charperiodic/cli.hpp>

int main(int argc, char** argv) { return charperiodic::run_cli(argc, argv); }
