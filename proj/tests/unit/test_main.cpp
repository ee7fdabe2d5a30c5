#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "outlierlab/blas_check.hpp"

int main(int argc, char** argv) {
  olab::blas_check::ensure_reliable_blas(argc, argv);
  return doctest::Context(argc, argv).run();
}
