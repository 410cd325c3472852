#include "commands.hpp"
#include "faor/allocator.hpp"

int main(int argc, char** argv) {
  faor::tune_allocator();
  return faor::cli::run(argc, argv);
}
