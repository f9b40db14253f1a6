#include "mcpd/cli.hpp"

int main(int argc, char** argv) { return mcpd::run(argc, argv); }
