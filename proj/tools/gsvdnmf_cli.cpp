#include <gsvdnmf/cli.hpp>

int main(int argc, char** argv) { return gsvdnmf::cli_main(argc, argv); }
