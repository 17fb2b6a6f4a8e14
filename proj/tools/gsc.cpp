#include "gsc/cli.hpp"

int main(int argc, char** argv) { return gsc::run_cli(argc, argv); }
