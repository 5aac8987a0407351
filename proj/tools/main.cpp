#include "cli.hpp"

int main(int argc, char** argv) { return nftf::cli::run(argc, argv); }
