#pragma once

#include "emgamp/operator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace emgamp {

enum class SignalKind {
    bernoulli_gaussian,
    bernoulli,
    bernoulli_rademacher,
    triangular_mixture,
    students_t,
    log_normal,
};

struct SignalSpec {
    SignalKind kind = SignalKind::bernoulli_gaussian;
    std::size_t n = 0;
    std::size_t k = 0;      // exact support size; k = n means a dense draw
    double t_rate = 1.67;   // students_t only
    double ln_location = 0.0;
    double ln_scale_sq = 1.0;
};

enum class MatrixKind {
    iid_gaussian,
    iid_uniform,
    iid_cauchy,
    iid_bernoulli,
    iid_bernoulli_rademacher,
    row_sampled_dct,
};

struct MatrixSpec {
    MatrixKind kind = MatrixKind::iid_gaussian;
    std::size_t m = 0;
    std::size_t n = 0;
    double activity = 1.0; // lambda_A for the bernoulli kinds
};

SignalKind parse_signal_kind(const std::string& name);
MatrixKind parse_matrix_kind(const std::string& name);

std::vector<double> gen_signal(const SignalSpec& spec, std::uint64_t seed);
LinearOperator gen_matrix(const MatrixSpec& spec, std::uint64_t seed);

struct NoisyMeasurement {
    std::vector<double> y;
    double psi_true;
};

// snr_db = +inf selects the noiseless path (psi_true = 0).
NoisyMeasurement add_noise(const std::vector<double>& z, double snr_db,
                           std::uint64_t seed);

} // namespace emgamp
