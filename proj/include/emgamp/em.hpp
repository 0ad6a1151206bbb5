#pragma once

#include "emgamp/channels.hpp"
#include "emgamp/gamp.hpp"
#include "emgamp/operator.hpp"

#include <span>
#include <utility>
#include <vector>

namespace emgamp {

enum class EmMode { sparse, heavy_tailed };

struct EmConfig {
    EmMode mode = EmMode::sparse;
    int mixture_order = 0; // 0 = mode default (3 sparse, 4 heavy-tailed)
    int i_max = 20;
    double tol = 1e-5;
    double snr0 = 100.0; // initialization SNR guess
    bool warm_start = true;

    int order() const {
        if (mixture_order > 0) return mixture_order;
        return mode == EmMode::sparse ? 3 : 4;
    }
};

// Theoretical noiseless LASSO phase-transition value K/M for a given M/N.
double rho_se(double delta);

// Offline GM fit (weights, variances) to the uniform density on [-0.5,0.5]
// with means fixed at the canonical uniform spacing; L in [1,8].
std::vector<GmComponent> uniform_gm_fit(int order);

std::pair<GmPrior, NoiseModel> em_init(std::span<const double> y,
                                       const LinearOperator& op,
                                       const EmConfig& cfg);

double em_update_psi(std::span<const double> y,
                     std::span<const double> z_hat,
                     std::span<const double> mu_z);

double em_update_lambda(const PosteriorStats& stats);

// Component updates return the previous value unchanged (degenerate flag set)
// when the component carries no responsibility mass.
struct ComponentUpdate {
    double value;
    bool degenerate;
};
ComponentUpdate em_update_theta(const PosteriorStats& stats, double theta_prev,
                                std::size_t k);
ComponentUpdate em_update_phi(const PosteriorStats& stats, double theta_prev,
                              double phi_prev, std::size_t k);
std::vector<double> em_update_omega(const PosteriorStats& stats,
                                    std::vector<double> omega_prev);

struct EmTraceEntry {
    int iteration;
    GmPrior prior;
    double psi;
    int gamp_iterations;
    double residual; // normalized x_hat change across EM iterations
};

struct EmResult {
    std::vector<double> x_hat;
    std::vector<double> mu_x;
    std::vector<double> pi;
    GmPrior prior;
    NoiseModel noise;
    PosteriorStats stats;
    bool converged = false;
    int iterations = 0;
    std::vector<EmTraceEntry> trace;
};

EmResult em_gm_amp(std::span<const double> y, const LinearOperator& op,
                   const EmConfig& cfg, const GampConfig& gamp_cfg);

// Same loop but starting from a caller-supplied parameter estimate (used by
// model-order selection to warm-start candidate fits).
EmResult em_gm_amp_with_init(std::span<const double> y,
                             const LinearOperator& op, const EmConfig& cfg,
                             const GampConfig& gamp_cfg, GmPrior prior,
                             NoiseModel noise);

// Fixed-parameter recovery (no learning): one call into the iteration engine
// with the supplied prior and noise model.
EmResult genie_gm_amp(std::span<const double> y, const LinearOperator& op,
                      const GmPrior& prior, const NoiseModel& noise,
                      const GampConfig& gamp_cfg);

} // namespace emgamp
