#include "rqe/cli.hpp"

int main(int argc, char** argv) { return rqe::cli::run(argc, argv); }
