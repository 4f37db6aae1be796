#include "chordseg/cli.hpp"

int main(int argc, char** argv) { return chordseg::cli::run(argc, argv); }
