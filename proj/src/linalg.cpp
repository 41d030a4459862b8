#include "gsched/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "gsched/error.hpp"

namespace gsched {

std::vector<std::complex<double>> eigenvalues(const MatX& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidInput("eigenvalues: matrix must be square and non-empty");
    }
    Eigen::EigenSolver<MatX> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error("eigenvalues: QR iteration did not converge");
    }
    std::vector<std::complex<double>> out(solver.eigenvalues().data(),
                                          solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) {
            return a.real() > b.real();
        }
        return a.imag() > b.imag();
    });
    return out;
}

double spectral_abscissa(const MatX& m) {
    return eigenvalues(m).front().real();
}

bool is_hurwitz(const MatX& m) {
    return spectral_abscissa(m) < 0.0;
}

double matrix_norm(const MatX& m, MatrixNorm kind) {
    switch (kind) {
    case MatrixNorm::Frobenius:
        return m.norm();
    case MatrixNorm::Spectral:
        break;
    }
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<MatX> svd(m);
    return svd.singularValues()(0);
}

double sym_lambda_min(const MatX& s) {
    Eigen::SelfAdjointEigenSolver<MatX> solver(s, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

double sym_lambda_max(const MatX& s) {
    Eigen::SelfAdjointEigenSolver<MatX> solver(s, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(s.rows() - 1);
}

bool all_finite(const MatX& m) {
    return m.allFinite();
}

} // namespace gsched
