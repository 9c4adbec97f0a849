#include "cli.hpp"

int main(int argc, char** argv) { return xrn::cli::run(argc, argv); }
