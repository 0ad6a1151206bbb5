#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emgamp {

// Measurement matrix abstraction.  Dense operators store their coefficients
// row-major; row-sampled operators apply an orthonormal DCT-II of size n and
// keep m selected rows.  The squared products of the row-sampled kind use the
// uniform approximation |A_mn|^2 ~ 1/n, which is exact in aggregate because
// the transform rows have unit l2 norm.
class LinearOperator {
public:
    enum class Kind { dense, row_sampled_dct };

    static LinearOperator dense(std::size_t m, std::size_t n,
                                std::vector<double> row_major);
    static LinearOperator identity(std::size_t n);
    static LinearOperator row_sampled_dct(std::size_t n,
                                          std::vector<std::size_t> rows);

    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }
    Kind kind() const { return kind_; }

    std::vector<double> forward(std::span<const double> x) const;
    std::vector<double> adjoint(std::span<const double> s) const;

    // Elementwise-squared matrix products on nonnegative vectors.
    std::vector<double> squared_forward(std::span<const double> mu) const;
    std::vector<double> squared_adjoint(std::span<const double> mu) const;

    double frobenius_norm_sq() const;

    // Row-major m*n materialization, for tests and small problems.
    std::vector<double> densify() const;

    // Serial reference paths, kept for correctness checks and benchmarks.
    std::vector<double> forward_serial(std::span<const double> x) const;
    std::vector<double> adjoint_serial(std::span<const double> s) const;

private:
    LinearOperator(Kind kind, std::size_t m, std::size_t n);

    Kind kind_;
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    std::vector<double> coeffs_;            // dense only
    std::vector<std::size_t> sampled_rows_; // row_sampled_dct only
};

} // namespace emgamp
