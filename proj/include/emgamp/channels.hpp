#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emgamp {

// Clamp interval for the sparsity rate and the floor applied to learned
// variances.  Noiseless experiments drive the learned noise variance toward
// zero, so both ends must stay strictly inside their domains.
inline constexpr double kLambdaFloor = 1e-12;
inline constexpr double kVarianceFloor = 1e-12;

struct GmComponent {
    double weight;
    double mean;
    double var;
};

// Sparse Gaussian-mixture prior: a point mass at zero with probability
// 1-lambda plus lambda times an L-component Gaussian mixture.
struct GmPrior {
    double lambda = 0.5;
    std::vector<GmComponent> components;

    std::size_t order() const { return components.size(); }

    // Moments of the full (spike-included) prior.
    double mean_value() const;
    double variance() const;

    // Clamps lambda, renormalizes weights, floors variances.
    void normalize();
    void validate() const; // throws on violated invariants
};

struct NoiseModel {
    double psi = 0.0; // AWGN variance
};

// Per-coefficient posterior quantities for the pseudo-measurement
// r_hat ~ N(x, mu_r) under a GmPrior.  Component-indexed arrays are
// row-major n-by-L.
struct PosteriorStats {
    std::size_t n = 0;
    std::size_t order = 0;
    std::vector<double> pi;       // activity probability, length n
    std::vector<double> beta_bar; // component responsibilities, n*L
    std::vector<double> gamma;    // component posterior means, n*L
    std::vector<double> nu;       // component posterior variances, n*L
    std::vector<double> log_zeta; // log normalization, length n

    double& at(std::vector<double>& v, std::size_t i, std::size_t l) {
        return v[i * order + l];
    }
};

struct GaussianProduct {
    double mean;
    double var;
    double log_scale; // log N(0; a-b, A+B)
};

// Product of N(x;a,A) and N(x;b,B) as scale * N(x; mean, var).
GaussianProduct gaussian_product(double a, double A, double b, double B);

double log_normal_pdf(double x, double mean, double var);

PosteriorStats input_posterior(std::span<const double> r_hat,
                               std::span<const double> mu_r,
                               const GmPrior& prior);

// Serial reference for the OpenMP kernel above; identical arithmetic.
PosteriorStats input_posterior_serial(std::span<const double> r_hat,
                                      std::span<const double> mu_r,
                                      const GmPrior& prior);

void input_moments(const PosteriorStats& stats, std::vector<double>& x_hat,
                   std::vector<double>& mu_x);

void output_moments(std::span<const double> y, std::span<const double> p_hat,
                    std::span<const double> mu_p, const NoiseModel& noise,
                    std::vector<double>& z_hat, std::vector<double>& mu_z);

} // namespace emgamp
