#include "commands.hpp"

int main(int argc, char** argv) { return tcache::cli::run(argc, argv); }
