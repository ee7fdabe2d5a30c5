#pragma once

namespace olab::blas_check {

/// Compares BLAS-backed real matrix products against Eigen's coefficient
/// kernel on two fixed shapes. True when they agree to 1e-12.
bool dgemm_agrees();

/// Call first in main(). Returns when dgemm passes the self-test. Otherwise,
/// if OPENBLAS_CORETYPE is unset, sets it to a conservative kernel and
/// re-executes the current binary with the same arguments; if it is already
/// set, throws NumericalError.
void ensure_reliable_blas(int argc, char** argv);

}  // namespace olab::blas_check
