#pragma once

#include <complex>
#include <vector>

#include "gsched/types.hpp"

namespace gsched {

// Eigenvalues of a general real square matrix, sorted by descending real part
// (ties broken by descending imaginary part).
[[nodiscard]] std::vector<std::complex<double>> eigenvalues(const MatX& m);

// Largest real part over the spectrum.
[[nodiscard]] double spectral_abscissa(const MatX& m);

[[nodiscard]] bool is_hurwitz(const MatX& m);

[[nodiscard]] double matrix_norm(const MatX& m, MatrixNorm kind);

// Extreme eigenvalues of a symmetric matrix (only the lower triangle is read).
[[nodiscard]] double sym_lambda_min(const MatX& s);
[[nodiscard]] double sym_lambda_max(const MatX& s);

[[nodiscard]] bool all_finite(const MatX& m);

} // namespace gsched
