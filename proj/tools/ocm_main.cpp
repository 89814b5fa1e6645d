#include "ocm/cli.hpp"

int main(int argc, char** argv) { return ocm::cli::run(argc, argv); }
