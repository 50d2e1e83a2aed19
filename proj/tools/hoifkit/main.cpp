#include "hoifkit/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return hoifkit::cli::dispatch(argc, argv, std::cout, std::cerr); }
