#include "cli.hpp"

int main(int argc, char** argv) { return hoa::run_cli(argc, argv); }
