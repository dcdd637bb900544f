#include "tasteprint/cli.hpp"

int main(int argc, char** argv) { return tasteprint::cli_dispatch(argc, argv); }
