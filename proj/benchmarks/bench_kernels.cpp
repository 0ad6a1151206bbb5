// Compares the OpenMP kernels against their serial reference paths:
// dense matvec/adjoint and the input-channel posterior.

#include "emgamp/channels.hpp"
#include "emgamp/operator.hpp"
#include "emgamp/signals.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace emgamp;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        f();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif

    const std::size_t n = 4000, m = 2000;
    MatrixSpec mspec;
    mspec.m = m;
    mspec.n = n;
    const LinearOperator op = gen_matrix(mspec, 7);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(n), s(m), r_hat(n), mu_r(n);
    for (double& v : x) v = g(rng);
    for (double& v : s) v = g(rng);
    for (std::size_t i = 0; i < n; ++i) {
        r_hat[i] = g(rng);
        mu_r[i] = 0.1 + 0.05 * std::abs(g(rng));
    }

    GmPrior prior;
    prior.lambda = 0.1;
    prior.components = {{0.5, -1.0, 0.2}, {0.3, 0.0, 1.0}, {0.2, 1.5, 0.4}};

    const int reps = 5;

    std::vector<double> y_par, y_ser;
    const double t_fwd_par = time_best_of(reps, [&] { y_par = op.forward(x); });
    const double t_fwd_ser =
        time_best_of(reps, [&] { y_ser = op.forward_serial(x); });
    std::printf("forward        parallel %.4fs  serial %.4fs  speedup %.2fx  "
                "max|diff| %.1e\n",
                t_fwd_par, t_fwd_ser, t_fwd_ser / t_fwd_par,
                max_abs_diff(y_par, y_ser));

    std::vector<double> a_par, a_ser;
    const double t_adj_par = time_best_of(reps, [&] { a_par = op.adjoint(s); });
    const double t_adj_ser =
        time_best_of(reps, [&] { a_ser = op.adjoint_serial(s); });
    std::printf("adjoint        parallel %.4fs  serial %.4fs  speedup %.2fx  "
                "max|diff| %.1e\n",
                t_adj_par, t_adj_ser, t_adj_ser / t_adj_par,
                max_abs_diff(a_par, a_ser));

    PosteriorStats st_par, st_ser;
    const double t_post_par = time_best_of(
        reps, [&] { st_par = input_posterior(r_hat, mu_r, prior); });
    const double t_post_ser = time_best_of(
        reps, [&] { st_ser = input_posterior_serial(r_hat, mu_r, prior); });
    std::printf("posterior      parallel %.4fs  serial %.4fs  speedup %.2fx  "
                "max|diff| %.1e\n",
                t_post_par, t_post_ser, t_post_ser / t_post_par,
                max_abs_diff(st_par.gamma, st_ser.gamma));

    return 0;
}
