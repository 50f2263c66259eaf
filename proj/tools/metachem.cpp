#include "metachem/cli.hpp"

int main(int argc, char** argv) { return metachem::cli::main_entry(argc, argv); }
