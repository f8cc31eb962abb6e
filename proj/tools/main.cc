#include "cli.h"

int main(int argc, char** argv) { return screensum::cli::run(argc, argv); }
