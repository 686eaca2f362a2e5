#include <string>
#include <vector>

#include "spectra/cli.hpp"

int main(int argc, char** argv) {
  return spectra::cli::main_entry(std::vector<std::string>(argv, argv + argc));
}
