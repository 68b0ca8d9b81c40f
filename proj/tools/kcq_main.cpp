#include "kcq/cli/commands.hpp"

int main(int argc, char** argv) { return kcq::cli::run(argc, argv); }
