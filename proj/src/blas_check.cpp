#include "outlierlab/blas_check.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <string>

#include "outlierlab/errors.hpp"
#include "outlierlab/linalg.hpp"

namespace olab::blas_check {

namespace {

bool product_agrees(Index m, Index k, Index n) {
  RMatrix a(m, k), b(k, n);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < m; ++i) a(i, j) = std::sin(0.37 * static_cast<double>(i) + 1.3 * static_cast<double>(j));
  }
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < k; ++i) b(i, j) = std::cos(0.91 * static_cast<double>(i) - 0.53 * static_cast<double>(j));
  }
  const RMatrix fast = a * b;
  const RMatrix slow = a.lazyProduct(b);
  return (fast - slow).norm() <= 1e-12 * slow.norm();
}

}  // namespace

bool dgemm_agrees() { return product_agrees(256, 256, 256) && product_agrees(512, 512, 4); }

void ensure_reliable_blas(int argc, char** argv) {
  (void)argc;
  if (dgemm_agrees()) return;
  if (const char* set = std::getenv("OPENBLAS_CORETYPE")) {
    throw NumericalError(std::string("BLAS dgemm self-test failed with OPENBLAS_CORETYPE=") + set);
  }
  const char* core = __builtin_cpu_supports("avx512f") ? "SkylakeX"
                     : __builtin_cpu_supports("avx2")  ? "Haswell"
                                                       : "Nehalem";
  ::setenv("OPENBLAS_CORETYPE", core, 1);
  ::execv("/proc/self/exe", argv);
  throw NumericalError("BLAS dgemm self-test failed and re-execution was not possible");
}

}  // namespace olab::blas_check
