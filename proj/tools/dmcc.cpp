#include "dmcc/cli.hpp"

int main(int argc, char** argv) { return dmcc::cli::dispatch(argc, argv); }
