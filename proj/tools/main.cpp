#include "commands.hpp"

int main(int argc, char** argv) { return bornfast::cli::run(argc, argv); }
