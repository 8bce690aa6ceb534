#include "ftsdiff/cli.hpp"

int main(int argc, char** argv) { return fts::cli::run_cli(argc, argv); }
