#include "adrisk/cli.hpp"

int main(int argc, char** argv) { return adrisk::cli::run_cli(argc, argv); }
