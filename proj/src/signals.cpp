#include "emgamp/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace emgamp {

namespace {

using Rng = std::mt19937_64;

// k distinct indices from [0, n), order irrelevant.
std::vector<std::size_t> sample_support(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

double triangular_mixture_draw(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double center = u(rng) < 0.5 ? -1.0 : 1.0;
    // sum of two uniforms gives a triangle of half-width 0.5
    return center + 0.5 * (u(rng) + u(rng) - 1.0);
}

} // namespace

SignalKind parse_signal_kind(const std::string& name) {
    if (name == "bg") return SignalKind::bernoulli_gaussian;
    if (name == "bernoulli") return SignalKind::bernoulli;
    if (name == "br") return SignalKind::bernoulli_rademacher;
    if (name == "trimix") return SignalKind::triangular_mixture;
    if (name == "student-t") return SignalKind::students_t;
    if (name == "log-normal") return SignalKind::log_normal;
    throw std::invalid_argument("unknown signal kind: " + name);
}

MatrixKind parse_matrix_kind(const std::string& name) {
    if (name == "gaussian") return MatrixKind::iid_gaussian;
    if (name == "uniform") return MatrixKind::iid_uniform;
    if (name == "cauchy") return MatrixKind::iid_cauchy;
    if (name == "bernoulli") return MatrixKind::iid_bernoulli;
    if (name == "br") return MatrixKind::iid_bernoulli_rademacher;
    if (name == "dct") return MatrixKind::row_sampled_dct;
    throw std::invalid_argument("unknown matrix kind: " + name);
}

std::vector<double> gen_signal(const SignalSpec& spec, std::uint64_t seed) {
    if (spec.n == 0 || spec.k > spec.n)
        throw std::invalid_argument("gen_signal: invalid dimensions");
    Rng rng(seed);
    std::vector<double> x(spec.n, 0.0);
    std::vector<std::size_t> support = sample_support(spec.n, spec.k, rng);

    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t idx : support) {
        switch (spec.kind) {
            case SignalKind::bernoulli_gaussian:
                x[idx] = normal(rng);
                break;
            case SignalKind::bernoulli:
                x[idx] = 1.0;
                break;
            case SignalKind::bernoulli_rademacher:
                x[idx] = u(rng) < 0.5 ? -1.0 : 1.0;
                break;
            case SignalKind::triangular_mixture:
                x[idx] = triangular_mixture_draw(rng);
                break;
            case SignalKind::students_t: {
                std::student_t_distribution<double> st(spec.t_rate);
                x[idx] = st(rng) / std::sqrt(spec.t_rate);
                break;
            }
            case SignalKind::log_normal: {
                const double g = normal(rng);
                x[idx] =
                    std::exp(spec.ln_location + std::sqrt(spec.ln_scale_sq) * g);
                break;
            }
        }
    }
    return x;
}

LinearOperator gen_matrix(const MatrixSpec& spec, std::uint64_t seed) {
    if (spec.m == 0 || spec.n == 0)
        throw std::invalid_argument("gen_matrix: invalid dimensions");
    Rng rng(seed);
    const std::size_t m = spec.m, n = spec.n;

    if (spec.kind == MatrixKind::row_sampled_dct) {
        if (m > n)
            throw std::invalid_argument("gen_matrix: dct needs m <= n");
        std::vector<std::size_t> rows = sample_support(n, m, rng);
        return LinearOperator::row_sampled_dct(n, std::move(rows));
    }

    std::vector<double> a(m * n);
    switch (spec.kind) {
        case MatrixKind::iid_gaussian: {
            std::normal_distribution<double> g(0.0,
                                               1.0 / std::sqrt(double(m)));
            for (double& v : a) v = g(rng);
            break;
        }
        case MatrixKind::iid_uniform: {
            std::uniform_real_distribution<double> uu(-0.5, 0.5);
            for (double& v : a) v = uu(rng);
            break;
        }
        case MatrixKind::iid_cauchy: {
            std::cauchy_distribution<double> c(0.0, 1.0);
            for (double& v : a) v = c(rng);
            break;
        }
        case MatrixKind::iid_bernoulli:
        case MatrixKind::iid_bernoulli_rademacher: {
            const bool rademacher =
                spec.kind == MatrixKind::iid_bernoulli_rademacher;
            std::uniform_real_distribution<double> uu(0.0, 1.0);
            // Column-wise generation with duplicate-column rejection.
            std::unordered_set<std::string> seen;
            for (std::size_t j = 0; j < n; ++j) {
                std::string key;
                for (int attempt = 0;; ++attempt) {
                    key.assign(m, '0');
                    for (std::size_t i = 0; i < m; ++i) {
                        const double r = uu(rng);
                        if (r < spec.activity)
                            key[i] = rademacher ? (uu(rng) < 0.5 ? '-' : '+')
                                                : '+';
                    }
                    if (seen.insert(key).second) break;
                    if (attempt > 1000)
                        throw std::runtime_error(
                            "gen_matrix: cannot avoid duplicate columns");
                }
                for (std::size_t i = 0; i < m; ++i)
                    a[i * n + j] =
                        key[i] == '0' ? 0.0 : (key[i] == '-' ? -1.0 : 1.0);
            }
            break;
        }
        default:
            break;
    }
    return LinearOperator::dense(m, n, std::move(a));
}

NoisyMeasurement add_noise(const std::vector<double>& z, double snr_db,
                           std::uint64_t seed) {
    const double energy =
        std::inner_product(z.begin(), z.end(), z.begin(), 0.0);
    if (!(energy > 0.0))
        throw std::invalid_argument("add_noise: zero measurement energy");

    NoisyMeasurement out;
    if (std::isinf(snr_db)) {
        out.y = z;
        out.psi_true = 0.0;
        return out;
    }
    out.psi_true =
        energy / (static_cast<double>(z.size()) * std::pow(10.0, snr_db / 10.0));
    Rng rng(seed);
    std::normal_distribution<double> w(0.0, std::sqrt(out.psi_true));
    out.y.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out.y[i] = z[i] + w(rng);
    return out;
}

} // namespace emgamp
