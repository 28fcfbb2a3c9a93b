#include "cli.hpp"

int main(int argc, char** argv) { return sasreg::cli::run(argc, argv); }
