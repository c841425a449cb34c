#include "quasivar/cli.hpp"

int main(int argc, char** argv) { return quasivar::cli::main_entry(argc, argv); }
