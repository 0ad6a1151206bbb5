#include "emgamp/operator.hpp"

#include <fftw3.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace emgamp {

namespace {

void check_length(std::span<const double> v, std::size_t expected,
                  const char* what) {
    if (v.size() != expected)
        throw std::invalid_argument(std::string(what) + ": length mismatch");
}

void check_nonnegative(std::span<const double> v, const char* what) {
    for (double x : v)
        if (x < 0.0)
            throw std::invalid_argument(std::string(what) +
                                        ": negative entry");
}

// Process-wide FFTW plan cache keyed by transform size.  Plan creation is not
// thread-safe; new-array execution is.
struct DctPlans {
    fftw_plan fwd;  // REDFT10
    fftw_plan inv;  // REDFT01
};

DctPlans dct_plans(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, DctPlans> cache;
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> in(n), out(n);
    DctPlans p;
    p.fwd = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(),
                             FFTW_REDFT10, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inv = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(),
                             FFTW_REDFT01, FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(n, p);
    return p;
}

// Orthonormal DCT-II of x (all n coefficients).
std::vector<double> dct_orthonormal(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> in(x.begin(), x.end()), out(n);
    fftw_execute_r2r(dct_plans(n).fwd, in.data(), out.data());
    const double s0 = std::sqrt(1.0 / (4.0 * n));
    const double sk = std::sqrt(1.0 / (2.0 * n));
    out[0] *= s0;
    for (std::size_t k = 1; k < n; ++k) out[k] *= sk;
    return out;
}

// Transpose of the orthonormal DCT-II applied to a full-length vector.
std::vector<double> dct_orthonormal_adjoint(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> in(n), out(n);
    in[0] = v[0] * std::sqrt(1.0 / n);
    const double half_sk = 0.5 * std::sqrt(2.0 / n);
    for (std::size_t k = 1; k < n; ++k) in[k] = v[k] * half_sk;
    fftw_execute_r2r(dct_plans(n).inv, in.data(), out.data());
    return out;
}

} // namespace

LinearOperator::LinearOperator(Kind kind, std::size_t m, std::size_t n)
    : kind_(kind), m_(m), n_(n) {}

LinearOperator LinearOperator::dense(std::size_t m, std::size_t n,
                                     std::vector<double> row_major) {
    if (row_major.size() != m * n)
        throw std::invalid_argument("dense operator: storage size mismatch");
    LinearOperator op(Kind::dense, m, n);
    op.coeffs_ = std::move(row_major);
    return op;
}

LinearOperator LinearOperator::identity(std::size_t n) {
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
    return dense(n, n, std::move(a));
}

LinearOperator LinearOperator::row_sampled_dct(std::size_t n,
                                               std::vector<std::size_t> rows) {
    for (std::size_t r : rows)
        if (r >= n)
            throw std::invalid_argument("row_sampled_dct: row index out of range");
    LinearOperator op(Kind::row_sampled_dct, rows.size(), n);
    op.sampled_rows_ = std::move(rows);
    return op;
}

std::vector<double> LinearOperator::forward(std::span<const double> x) const {
    check_length(x, n_, "forward");
    if (kind_ == Kind::dense) {
        std::vector<double> y(m_);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m_); ++i) {
            const double* row = coeffs_.data() + i * n_;
            double acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        return y;
    }
    std::vector<double> full = dct_orthonormal(x);
    std::vector<double> y(m_);
    for (std::size_t i = 0; i < m_; ++i) y[i] = full[sampled_rows_[i]];
    return y;
}

std::vector<double> LinearOperator::adjoint(std::span<const double> s) const {
    check_length(s, m_, "adjoint");
    if (kind_ == Kind::dense) {
        // Stream the matrix row-major: each thread owns a contiguous slice of
        // output columns and accumulates over rows in ascending order, so the
        // per-element summation order (and hence the result, bit for bit)
        // matches the serial column-walk regardless of thread count.
        std::vector<double> r(n_, 0.0);
#pragma omp parallel
        {
            std::size_t j0 = 0, j1 = n_;
#ifdef _OPENMP
            const std::size_t nt = std::size_t(omp_get_num_threads());
            const std::size_t tid = std::size_t(omp_get_thread_num());
            const std::size_t chunk = (n_ + nt - 1) / nt;
            j0 = std::min(n_, chunk * tid);
            j1 = std::min(n_, j0 + chunk);
#endif
            for (std::size_t i = 0; i < m_; ++i) {
                const double si = s[i];
                const double* row = coeffs_.data() + i * n_;
                for (std::size_t j = j0; j < j1; ++j) r[j] += si * row[j];
            }
        }
        return r;
    }
    std::vector<double> full(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) full[sampled_rows_[i]] = s[i];
    return dct_orthonormal_adjoint(full);
}

std::vector<double> LinearOperator::forward_serial(std::span<const double> x) const {
    check_length(x, n_, "forward");
    if (kind_ != Kind::dense) return forward(x);
    std::vector<double> y(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        const double* row = coeffs_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t j = 0; j < n_; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

std::vector<double> LinearOperator::adjoint_serial(std::span<const double> s) const {
    check_length(s, m_, "adjoint");
    if (kind_ != Kind::dense) return adjoint(s);
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m_; ++i) acc += coeffs_[i * n_ + j] * s[i];
        r[j] = acc;
    }
    return r;
}

std::vector<double> LinearOperator::squared_forward(
    std::span<const double> mu) const {
    check_length(mu, n_, "squared_forward");
    check_nonnegative(mu, "squared_forward");
    if (kind_ == Kind::dense) {
        std::vector<double> out(m_);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m_); ++i) {
            const double* row = coeffs_.data() + i * n_;
            double acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) acc += row[j] * row[j] * mu[j];
            out[i] = acc;
        }
        return out;
    }
    const double mean = std::accumulate(mu.begin(), mu.end(), 0.0) /
                        static_cast<double>(n_);
    return std::vector<double>(m_, mean);
}

std::vector<double> LinearOperator::squared_adjoint(
    std::span<const double> mu) const {
    check_length(mu, m_, "squared_adjoint");
    check_nonnegative(mu, "squared_adjoint");
    if (kind_ == Kind::dense) {
        // Row-streaming layout as in adjoint(); same bitwise guarantees.
        std::vector<double> out(n_, 0.0);
#pragma omp parallel
        {
            std::size_t j0 = 0, j1 = n_;
#ifdef _OPENMP
            const std::size_t nt = std::size_t(omp_get_num_threads());
            const std::size_t tid = std::size_t(omp_get_thread_num());
            const std::size_t chunk = (n_ + nt - 1) / nt;
            j0 = std::min(n_, chunk * tid);
            j1 = std::min(n_, j0 + chunk);
#endif
            for (std::size_t i = 0; i < m_; ++i) {
                const double mi = mu[i];
                const double* row = coeffs_.data() + i * n_;
                for (std::size_t j = j0; j < j1; ++j)
                    out[j] += row[j] * row[j] * mi;
            }
        }
        return out;
    }
    const double sum = std::accumulate(mu.begin(), mu.end(), 0.0);
    return std::vector<double>(n_, sum / static_cast<double>(n_));
}

double LinearOperator::frobenius_norm_sq() const {
    if (kind_ == Kind::dense) {
        double acc = 0.0;
        for (double a : coeffs_) acc += a * a;
        return acc;
    }
    // Orthonormal transform rows have unit norm.
    return static_cast<double>(m_);
}

std::vector<double> LinearOperator::densify() const {
    if (kind_ == Kind::dense) return coeffs_;
    std::vector<double> a(m_ * n_);
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t k = sampled_rows_[i];
        const double scale =
            k == 0 ? std::sqrt(1.0 / n_) : std::sqrt(2.0 / n_);
        for (std::size_t j = 0; j < n_; ++j)
            a[i * n_ + j] =
                scale * std::cos(pi * (j + 0.5) * k / static_cast<double>(n_));
    }
    return a;
}

} // namespace emgamp
