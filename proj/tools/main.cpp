#include "scoregeo/cli.hpp"

int main(int argc, char** argv) { return scoregeo::run_cli(argc, argv); }
