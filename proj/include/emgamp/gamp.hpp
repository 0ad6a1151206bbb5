#pragma once

#include "emgamp/channels.hpp"
#include "emgamp/operator.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace emgamp {

struct GampConfig {
    int t_max = 20;
    double tol = 1e-5;            // normalized stopping tolerance
    double variance_floor = 1e-12;
    double damping = 1.0;         // 1 = off
};

struct GampState {
    std::vector<double> x_hat, mu_x; // length n
    std::vector<double> s_hat, mu_s; // length m
    std::vector<double> p_hat, mu_p; // length m
    std::vector<double> z_hat, mu_z; // length m
    std::vector<double> r_hat, mu_r; // length n
    int iteration = 0;
};

struct GampResult {
    GampState state;
    PosteriorStats stats; // from the final input_posterior call
    bool converged = false;
    int iterations = 0;
};

// Raised when a variance or residual becomes non-finite mid-run.
struct GampDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-iteration observer: (t, normalized x_hat change, current x_hat).
using GampTraceFn =
    std::function<void(int, double, const std::vector<double>&)>;

GampState gamp_init(const LinearOperator& op, const GmPrior& prior);

GampResult gamp_run(const LinearOperator& op, std::span<const double> y,
                    const GmPrior& prior, const NoiseModel& noise,
                    const GampConfig& cfg,
                    const GampState* warm_start = nullptr,
                    const GampTraceFn& trace = nullptr);

} // namespace emgamp
