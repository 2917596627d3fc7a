#include "snimpa/io/cli.hpp"

int main(int argc, char** argv) { return snimpa::io::main_entry(argc, argv); }
