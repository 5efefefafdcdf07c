#include "wvsort/cli.hpp"

int main(int argc, char** argv) { return wvsort::cli::run(argc, argv); }
