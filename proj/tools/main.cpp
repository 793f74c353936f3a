#include <iostream>

#include "causal_shap/cli/run.hpp"

int main(int argc, char** argv) { return cshap::cli::cli_main(argc, argv, std::cout, std::cerr); }
