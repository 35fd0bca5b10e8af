#include "rbsde/cli.hpp"

int main(int argc, char** argv) { return rbsde::run_cli(argc, argv); }
