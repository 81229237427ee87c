#include "mfens/cli.hpp"

int main(int argc, char** argv) { return mfens::run_cli(argc, argv); }
