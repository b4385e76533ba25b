#include <bicforge/cli.hpp>

int main(int argc, char** argv) { return bicforge::cli::dispatch(argc, argv); }
