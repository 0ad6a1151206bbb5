#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emgamp/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace emgamp;

TEST_CASE("kind parsing") {
    CHECK(parse_signal_kind("bg") == SignalKind::bernoulli_gaussian);
    CHECK(parse_signal_kind("student-t") == SignalKind::students_t);
    CHECK_THROWS(parse_signal_kind("nope"));
    CHECK(parse_matrix_kind("dct") == MatrixKind::row_sampled_dct);
    CHECK_THROWS(parse_matrix_kind("nope"));
}

TEST_CASE("determinism and exact sparsity") {
    SignalSpec spec;
    spec.n = 200;
    spec.k = 37;
    auto a = gen_signal(spec, 99);
    auto b = gen_signal(spec, 99);
    CHECK(a == b);
    auto c = gen_signal(spec, 100);
    CHECK(a != c);
    const auto nnz = std::count_if(a.begin(), a.end(),
                                   [](double v) { return v != 0.0; });
    CHECK(nnz == 37);
}

TEST_CASE("bernoulli nonzeros are ones") {
    SignalSpec spec;
    spec.kind = SignalKind::bernoulli;
    spec.n = 50;
    spec.k = 3;
    auto x = gen_signal(spec, 5);
    int nnz = 0;
    for (double v : x)
        if (v != 0.0) {
            CHECK(v == 1.0);
            ++nnz;
        }
    CHECK(nnz == 3);
}

TEST_CASE("rademacher moments over dense draws") {
    SignalSpec spec;
    spec.kind = SignalKind::bernoulli_rademacher;
    spec.n = 100000;
    spec.k = spec.n;
    auto x = gen_signal(spec, 6);
    double mean = 0.0, second = 0.0;
    for (double v : x) {
        CHECK(std::abs(v) == 1.0);
        mean += v;
        second += v * v;
    }
    mean /= double(spec.n);
    second /= double(spec.n);
    // 3-sigma band for the mean of +-1 draws
    CHECK(std::abs(mean) < 3.0 / std::sqrt(double(spec.n)));
    CHECK(second == doctest::Approx(1.0));
}

TEST_CASE("student-t median matches the cdf quadrature oracle") {
    SignalSpec spec;
    spec.kind = SignalKind::students_t;
    spec.n = 200000;
    spec.k = spec.n;
    auto x = gen_signal(spec, 7);
    std::vector<double> mags(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mags[i] = std::abs(x[i]);
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    const double emp_median = mags[mags.size() / 2];

    // density of x = t/sqrt(q), t Student's-t with q degrees of freedom
    const double q = spec.t_rate;
    auto pdf = [&](double v) {
        const double t = v * std::sqrt(q);
        const double c = std::tgamma((q + 1.0) / 2.0) /
                         (std::sqrt(q * M_PI) * std::tgamma(q / 2.0));
        return std::sqrt(q) * c *
               std::pow(1.0 + t * t / q, -(q + 1.0) / 2.0);
    };
    // bisect m with integral_{-m}^{m} pdf = 0.5 (Simpson)
    auto mass = [&](double hi) {
        const int steps = 20000;
        const double h = 2.0 * hi / steps;
        double acc = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double v = -hi + h * i;
            const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * pdf(v);
        }
        return acc * h / 3.0;
    };
    double lo = 0.0, hi = 10.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) < 0.5 ? lo : hi) = mid;
    }
    const double oracle_median = 0.5 * (lo + hi);
    CHECK(std::abs(emp_median - oracle_median) / oracle_median < 0.02);
}

TEST_CASE("log-normal draws are positive with matching log-moments") {
    SignalSpec spec;
    spec.kind = SignalKind::log_normal;
    spec.n = 100000;
    spec.k = spec.n;
    auto x = gen_signal(spec, 8);
    double lm = 0.0, ls = 0.0;
    for (double v : x) {
        CHECK(v > 0.0);
        lm += std::log(v);
    }
    lm /= double(spec.n);
    for (double v : x) ls += (std::log(v) - lm) * (std::log(v) - lm);
    ls /= double(spec.n);
    CHECK(std::abs(lm) < 0.02);
    CHECK(ls == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("triangular mixture support") {
    SignalSpec spec;
    spec.kind = SignalKind::triangular_mixture;
    spec.n = 50000;
    spec.k = spec.n;
    auto x = gen_signal(spec, 9);
    int neg = 0;
    for (double v : x) {
        CHECK(std::abs(v) >= 0.5);
        CHECK(std::abs(v) <= 1.5);
        if (v < 0) ++neg;
    }
    // both humps populated
    CHECK(neg > int(spec.n) / 3);
    CHECK(neg < 2 * int(spec.n) / 3);
}

TEST_CASE("gaussian matrix column normalization") {
    MatrixSpec spec;
    spec.m = 100;
    spec.n = 200;
    auto op = gen_matrix(spec, 11);
    auto a = op.densify();
    double total = 0.0;
    for (std::size_t j = 0; j < spec.n; ++j) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < spec.m; ++i)
            norm2 += a[i * spec.n + j] * a[i * spec.n + j];
        total += norm2;
    }
    // E column norm^2 = 1; averaged over 200 columns, sd ~ sqrt(2/m/n)
    CHECK(total / double(spec.n) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("bernoulli matrix activity rate and distinct columns") {
    MatrixSpec spec;
    spec.kind = MatrixKind::iid_bernoulli_rademacher;
    spec.m = 100;
    spec.n = 300;
    spec.activity = 0.15;
    auto op = gen_matrix(spec, 12);
    auto a = op.densify();
    std::size_t nnz = 0;
    for (double v : a) {
        CHECK((v == 0.0 || v == 1.0 || v == -1.0));
        if (v != 0.0) ++nnz;
    }
    const double frac = double(nnz) / double(a.size());
    CHECK(std::abs(frac - 0.15) < 3.0 * std::sqrt(0.15 * 0.85 / double(a.size())));

    for (std::size_t j1 = 0; j1 < spec.n; ++j1)
        for (std::size_t j2 = j1 + 1; j2 < spec.n; ++j2) {
            bool same = true;
            for (std::size_t i = 0; i < spec.m && same; ++i)
                same = a[i * spec.n + j1] == a[i * spec.n + j2];
            CHECK(!same);
        }
}

TEST_CASE("duplicate-column rejection regenerates until distinct") {
    // 2x4 binary matrix with activity 0.5: only 4 possible columns, so all
    // of them must appear exactly once.
    MatrixSpec spec;
    spec.kind = MatrixKind::iid_bernoulli;
    spec.m = 2;
    spec.n = 4;
    spec.activity = 0.5;
    auto op = gen_matrix(spec, 13);
    auto a = op.densify();
    for (std::size_t j1 = 0; j1 < 4; ++j1)
        for (std::size_t j2 = j1 + 1; j2 < 4; ++j2)
            CHECK(!(a[0 * 4 + j1] == a[0 * 4 + j2] &&
                    a[1 * 4 + j1] == a[1 * 4 + j2]));
}

TEST_CASE("row-sampled dct rows are distinct") {
    MatrixSpec spec;
    spec.kind = MatrixKind::row_sampled_dct;
    spec.m = 48;
    spec.n = 128;
    auto op = gen_matrix(spec, 14);
    CHECK(op.kind() == LinearOperator::Kind::row_sampled_dct);
    auto a = op.densify();
    for (std::size_t i1 = 0; i1 < spec.m; ++i1)
        for (std::size_t i2 = i1 + 1; i2 < spec.m; ++i2) {
            double diff = 0.0;
            for (std::size_t j = 0; j < spec.n; ++j)
                diff += std::abs(a[i1 * spec.n + j] - a[i2 * spec.n + j]);
            CHECK(diff > 1e-6);
        }
}

TEST_CASE("noise injection arithmetic") {
    std::vector<double> z(4, 1.0);
    auto noiseless = add_noise(z, std::numeric_limits<double>::infinity(), 1);
    CHECK(noiseless.y == z);
    CHECK(noiseless.psi_true == 0.0);

    auto unit = add_noise(z, 0.0, 1);
    CHECK(unit.psi_true == doctest::Approx(1.0));

    std::vector<double> zero(4, 0.0);
    CHECK_THROWS(add_noise(zero, 10.0, 1));
}

TEST_CASE("realized snr tracks the target") {
    std::vector<double> z(500);
    std::mt19937_64 rng(15);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : z) v = g(rng);
    const double ez = std::inner_product(z.begin(), z.end(), z.begin(), 0.0);

    const double target = 15.0;
    double snr_sum = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        auto meas = add_noise(z, target, 1000 + s);
        double ew = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double w = meas.y[i] - z[i];
            ew += w * w;
        }
        snr_sum += 10.0 * std::log10(ez / ew);
    }
    CHECK(std::abs(snr_sum / seeds - target) < 0.5);
}
