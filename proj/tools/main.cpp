#include "synrec/cli.hpp"

int main(int argc, char** argv) { return synrec::run_cli(argc, argv); }
