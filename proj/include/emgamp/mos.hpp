#pragma once

#include "emgamp/em.hpp"

#include <stdexcept>
#include <vector>

namespace emgamp {

struct MosConfig {
    int initial_order = 0; // 0 = mode default
    int j_max = 5;
    int order_max = 8;
};

struct MosMetric {
    int order;
    double log_likelihood; // penalty-free lower bound
    double penalty;
    double score;
    double sample_size; // U = sum of pi
};

struct InsufficientSupport : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// BIC-penalized score of a candidate prior, evaluated against the posterior
// stats of the current-order fit.
MosMetric mos_metric(const PosteriorStats& stats_prev, const GmPrior& candidate,
                     EmMode mode);

struct MosSweep {
    int iteration;                    // j
    std::vector<MosMetric> candidates;
    int selected_order;
    std::vector<double> selected_x_hat; // estimate of the chosen candidate
};

struct MosResult {
    int order = 0;
    EmResult fit;
    std::vector<MosSweep> trace;
};

MosResult mos_select(std::span<const double> y, const LinearOperator& op,
                     const EmConfig& cfg, const GampConfig& gamp_cfg,
                     const MosConfig& mos_cfg);

} // namespace emgamp
