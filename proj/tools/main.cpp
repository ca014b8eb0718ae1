#include "vlut/cli.hpp"

int main(int argc, char** argv) { return vlut::cli_main(argc, argv); }
