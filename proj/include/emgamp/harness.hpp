#pragma once

#include "emgamp/em.hpp"
#include "emgamp/mos.hpp"
#include "emgamp/signals.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace emgamp {

// NMSE floor in dB for exact recoveries.
inline constexpr double kNmseFloorDb = -320.0;

double nmse_db(std::span<const double> x_true, std::span<const double> x_hat);

// Per-realization seed, independent across grid points and realizations.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t point_index,
                          std::uint64_t realization_index,
                          std::uint64_t stream);

struct SolverSpec {
    bool use_mos = false;
    EmConfig em;
    GampConfig gamp;
    MosConfig mos;
};

struct ExperimentGrid {
    std::size_t n = 500;
    std::size_t grid_cols = 8; // M/N samples
    std::size_t grid_rows = 8; // K/M samples
    double delta_min = 0.05, delta_max = 0.95;
    double rho_min = 0.05, rho_max = 0.95;
    std::size_t realizations = 25;
    std::uint64_t base_seed = 1;
    SignalKind signal = SignalKind::bernoulli_gaussian;
    MatrixKind matrix = MatrixKind::iid_gaussian;
    double matrix_activity = 1.0;
    double snr_db = std::numeric_limits<double>::infinity();
    double success_nmse = 1e-6;
    SolverSpec solver;
};

struct RealizationRecord {
    std::uint64_t seed;
    double nmse_db;
    bool success;
    bool diverged;
    double runtime_s;
};

struct GridPointResult {
    double m_over_n;
    double k_over_m;
    std::size_t m, k;
    double success_rate;
    double median_nmse_db;
    double mean_nmse_db;
    double mean_runtime_s;
    std::vector<RealizationRecord> records;
};

struct ResultTable {
    std::vector<GridPointResult> points;
};

struct PtcResult {
    ResultTable table;
    // One (M/N, K/M) pair per grid column: the interpolated 0.5-success
    // contour, clamped to the sampled rho range.
    std::vector<std::pair<double, double>> contour;
};

PtcResult run_ptc(const ExperimentGrid& grid);

struct SweepPoint {
    std::size_t m;
    double m_over_n;
    double median_nmse_db;
    double mean_nmse_db;
    double mean_runtime_s;
    std::vector<RealizationRecord> records;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    // Smallest M/N whose median NMSE is below the knee threshold.
    std::optional<double> breakpoint;
    double knee_threshold_db = -15.0;
};

SweepResult run_nmse_sweep(const SignalSpec& signal, MatrixKind matrix,
                           const std::vector<std::size_t>& m_values,
                           double snr_db, std::size_t realizations,
                           std::uint64_t base_seed, const SolverSpec& solver);

struct ScalingPoint {
    std::size_t n;
    double median_runtime_s;
    double median_nmse_db;
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    double loglog_slope;
};

ScalingResult run_scaling(const std::vector<std::size_t>& n_values,
                          double m_over_n, double k_over_n, MatrixKind matrix,
                          double snr_db, std::size_t realizations,
                          std::uint64_t base_seed, const SolverSpec& solver);

// Deterministic payload CSVs; wall-clock figures go to the sidecar writers.
void write_ptc_csv(std::ostream& os, const PtcResult& ptc);
void write_contour_csv(std::ostream& os, const PtcResult& ptc);
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);
void write_timing_csv(std::ostream& os, const ResultTable& table);
std::string format_full_precision(double v);

} // namespace emgamp
