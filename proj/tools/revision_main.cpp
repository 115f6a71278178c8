#include "revision/cli.hpp"

int main(int argc, char** argv) { return revision::run_command(argc, argv); }
