#include "xmal/cli.hpp"

int main(int argc, char** argv) { return xmal::cli::run(argc, argv); }
