#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "vtmm/log.hpp"

int main(int argc, char** argv) {
  vtmm::init_logging();
  doctest::Context context(argc, argv);
  return context.run();
}
