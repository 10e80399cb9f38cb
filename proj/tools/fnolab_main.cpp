#include "fnolab/cli.hpp"

int main(int argc, char** argv) { return fnolab::cli::run(argc, argv); }
