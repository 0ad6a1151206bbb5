#include "emgamp/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace emgamp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
} // namespace

double GmPrior::mean_value() const {
    double acc = 0.0;
    for (const auto& c : components) acc += c.weight * c.mean;
    return lambda * acc;
}

double GmPrior::variance() const {
    double second = 0.0;
    for (const auto& c : components)
        second += c.weight * (c.var + c.mean * c.mean);
    const double m = mean_value();
    return lambda * second - m * m;
}

void GmPrior::normalize() {
    lambda = std::clamp(lambda, kLambdaFloor, 1.0 - kLambdaFloor);
    double wsum = 0.0;
    for (auto& c : components) {
        c.weight = std::max(c.weight, 0.0);
        c.var = std::max(c.var, kVarianceFloor);
        wsum += c.weight;
    }
    if (wsum <= 0.0)
        throw std::invalid_argument("GmPrior: zero total mixture weight");
    for (auto& c : components) c.weight /= wsum;
}

void GmPrior::validate() const {
    if (components.empty())
        throw std::invalid_argument("GmPrior: no mixture components");
    if (lambda <= 0.0 || lambda >= 1.0)
        throw std::invalid_argument("GmPrior: lambda outside (0,1)");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (c.weight < 0.0)
            throw std::invalid_argument("GmPrior: negative weight");
        if (c.var <= 0.0)
            throw std::invalid_argument("GmPrior: nonpositive variance");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("GmPrior: weights do not sum to 1");
}

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

GaussianProduct gaussian_product(double a, double A, double b, double B) {
    if (A <= 0.0 || B <= 0.0)
        throw std::invalid_argument("gaussian_product: nonpositive variance");
    const double prec = 1.0 / A + 1.0 / B;
    GaussianProduct out;
    out.var = 1.0 / prec;
    out.mean = (a / A + b / B) * out.var;
    out.log_scale = log_normal_pdf(0.0, a - b, A + B);
    return out;
}

namespace {

// Per-coefficient posterior under the spike-plus-mixture prior, computed in
// the log domain with max-subtraction.
void posterior_at(std::size_t i, std::span<const double> r_hat,
                  std::span<const double> mu_r, const GmPrior& prior,
                  std::vector<double>& log_beta, PosteriorStats& out) {
    const std::size_t L = prior.order();
    const double r = r_hat[i];
    const double mr = mu_r[i];
    const double log_lambda = std::log(prior.lambda);
    const double log_zero =
        std::log1p(-prior.lambda) + log_normal_pdf(0.0, r, mr);

    double max_log = kNegInf;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& c = prior.components[l];
        double lb = kNegInf;
        if (c.weight > 0.0)
            lb = log_lambda + std::log(c.weight) +
                 log_normal_pdf(r, c.mean, c.var + mr);
        log_beta[l] = lb;
        max_log = std::max(max_log, lb);
    }
    double sum_exp = 0.0;
    for (std::size_t l = 0; l < L; ++l) sum_exp += std::exp(log_beta[l] - max_log);
    const double log_act = max_log + std::log(sum_exp);

    out.pi[i] = 1.0 / (1.0 + std::exp(log_zero - log_act));
    const double big = std::max(log_zero, log_act);
    out.log_zeta[i] =
        big + std::log(std::exp(log_zero - big) + std::exp(log_act - big));

    for (std::size_t l = 0; l < L; ++l) {
        const auto& c = prior.components[l];
        out.beta_bar[i * L + l] = std::exp(log_beta[l] - log_act);
        const double prec = 1.0 / mr + 1.0 / c.var;
        const double nu = 1.0 / prec;
        out.nu[i * L + l] = nu;
        out.gamma[i * L + l] = (r / mr + c.mean / c.var) * nu;
    }
}

PosteriorStats make_stats(std::size_t n, std::size_t L) {
    PosteriorStats s;
    s.n = n;
    s.order = L;
    s.pi.resize(n);
    s.beta_bar.resize(n * L);
    s.gamma.resize(n * L);
    s.nu.resize(n * L);
    s.log_zeta.resize(n);
    return s;
}

void check_inputs(std::span<const double> r_hat, std::span<const double> mu_r,
                  const GmPrior& prior) {
    prior.validate();
    if (r_hat.size() != mu_r.size())
        throw std::invalid_argument("input_posterior: length mismatch");
    for (double v : mu_r)
        if (!(v > 0.0))
            throw std::invalid_argument("input_posterior: nonpositive mu_r");
}

} // namespace

PosteriorStats input_posterior(std::span<const double> r_hat,
                               std::span<const double> mu_r,
                               const GmPrior& prior) {
    check_inputs(r_hat, mu_r, prior);
    const std::size_t n = r_hat.size();
    PosteriorStats out = make_stats(n, prior.order());
#pragma omp parallel
    {
        std::vector<double> scratch(prior.order());
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            posterior_at(static_cast<std::size_t>(i), r_hat, mu_r, prior,
                         scratch, out);
    }
    return out;
}

PosteriorStats input_posterior_serial(std::span<const double> r_hat,
                                      std::span<const double> mu_r,
                                      const GmPrior& prior) {
    check_inputs(r_hat, mu_r, prior);
    const std::size_t n = r_hat.size();
    PosteriorStats out = make_stats(n, prior.order());
    std::vector<double> scratch(prior.order());
    for (std::size_t i = 0; i < n; ++i)
        posterior_at(i, r_hat, mu_r, prior, scratch, out);
    return out;
}

void input_moments(const PosteriorStats& stats, std::vector<double>& x_hat,
                   std::vector<double>& mu_x) {
    const std::size_t n = stats.n;
    const std::size_t L = stats.order;
    x_hat.resize(n);
    mu_x.resize(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double mean = 0.0;
        double second = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double bb = stats.beta_bar[i * L + l];
            const double g = stats.gamma[i * L + l];
            mean += bb * g;
            second += bb * (stats.nu[i * L + l] + g * g);
        }
        const double pi = stats.pi[i];
        x_hat[i] = pi * mean;
        mu_x[i] = std::max(pi * second - x_hat[i] * x_hat[i], 0.0);
    }
}

void output_moments(std::span<const double> y, std::span<const double> p_hat,
                    std::span<const double> mu_p, const NoiseModel& noise,
                    std::vector<double>& z_hat, std::vector<double>& mu_z) {
    const std::size_t m = y.size();
    if (p_hat.size() != m || mu_p.size() != m)
        throw std::invalid_argument("output_moments: length mismatch");
    if (noise.psi < 0.0)
        throw std::invalid_argument("output_moments: negative noise variance");
    for (double v : mu_p)
        if (!(v > 0.0))
            throw std::invalid_argument("output_moments: nonpositive mu_p");
    z_hat.resize(m);
    mu_z.resize(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const double mp = mu_p[i];
        const double gain = mp / (mp + noise.psi);
        z_hat[i] = p_hat[i] + gain * (y[i] - p_hat[i]);
        mu_z[i] = gain * noise.psi;
    }
}

} // namespace emgamp
