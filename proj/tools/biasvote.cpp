#include "biasvote/cli.hpp"

int main(int argc, char** argv) { return biasvote::cli::run(argc, argv); }
