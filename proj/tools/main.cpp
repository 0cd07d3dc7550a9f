#include "fga/cli.hpp"

int main(int argc, char** argv) {
  return fga::run_cli({argv + 1, argv + argc});
}
