#include "jsr/cli/commands.h"

int main(int argc, char** argv) { return jsr::cli::Run(argc, argv); }
