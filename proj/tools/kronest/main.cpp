#include "commands.hpp"

int main(int argc, char** argv) { return kronest::cli::run(argc, argv); }
