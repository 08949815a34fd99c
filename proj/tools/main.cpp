#include "cli.hpp"

int main(int argc, char** argv) { return mwx::run_cli(argc, argv); }
