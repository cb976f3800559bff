#include "ivc/cli.hpp"
#include "ivc/platform.hpp"

int main(int argc, char** argv) {
  ivc::tune_allocator();
  return ivc::cli::run(argc, argv);
}
