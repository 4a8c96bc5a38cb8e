#include "sfslide/cli.hpp"

int main(int argc, char** argv) { return sfslide::cli::run(argc, argv); }
