#include "refract/commands.hpp"

int main(int argc, char **argv) { return refract::run_cli(argc, argv); }
