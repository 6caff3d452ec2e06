#include "periodic_heat/cli.hpp"

int main(int argc, char** argv) { return periodic_heat::cli::main(argc, argv); }
