#include "pollerr/cli.hpp"

int main(int argc, char** argv) { return pollerr::cli::run_main(argc, argv); }
