#include "basslv/cli.hpp"

int main(int argc, char** argv) { return basslv::cli::run(argc, argv); }
