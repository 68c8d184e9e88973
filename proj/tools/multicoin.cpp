#include "multicoin/cli.hpp"

int main(int argc, char** argv) { return multicoin::cli::run(argc, argv); }
