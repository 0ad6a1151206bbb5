#include "emgamp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace emgamp {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        return 0.5 * (lo + hi);
    }
    return hi;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One solve; divergence is reported, not thrown.
RealizationRecord solve_one(const LinearOperator& op,
                            const std::vector<double>& y,
                            const std::vector<double>& x_true,
                            const SolverSpec& solver, std::uint64_t seed,
                            double success_nmse) {
    RealizationRecord rec{};
    rec.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::vector<double> x_hat;
        if (solver.use_mos) {
            MosResult mos = mos_select(y, op, solver.em, solver.gamp, solver.mos);
            x_hat = std::move(mos.fit.x_hat);
        } else {
            EmResult em = em_gm_amp(y, op, solver.em, solver.gamp);
            x_hat = std::move(em.x_hat);
        }
        rec.nmse_db = nmse_db(x_true, x_hat);
    } catch (const std::exception&) {
        rec.diverged = true;
        rec.nmse_db = 0.0; // the null estimate's NMSE
    }
    rec.runtime_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    rec.success = !rec.diverged &&
                  rec.nmse_db < 10.0 * std::log10(success_nmse);
    return rec;
}

RealizationRecord run_realization(std::size_t n, std::size_t m, std::size_t k,
                                  SignalKind signal, MatrixKind matrix,
                                  double activity, double snr_db,
                                  const SolverSpec& solver,
                                  std::uint64_t base_seed,
                                  std::uint64_t point_index,
                                  std::uint64_t realization,
                                  double success_nmse = 1e-6) {
    const std::uint64_t seed = derive_seed(base_seed, point_index, realization, 0);
    if (k == 0) {
        // Nothing to recover; counted as an exact success.
        RealizationRecord rec{};
        rec.seed = seed;
        rec.nmse_db = kNmseFloorDb;
        rec.success = true;
        return rec;
    }
    SignalSpec sspec;
    sspec.kind = signal;
    sspec.n = n;
    sspec.k = k;
    MatrixSpec mspec;
    mspec.kind = matrix;
    mspec.m = m;
    mspec.n = n;
    mspec.activity = activity;

    const LinearOperator op =
        gen_matrix(mspec, derive_seed(base_seed, point_index, realization, 1));
    const std::vector<double> x = gen_signal(sspec, seed);
    const std::vector<double> z = op.forward(x);
    double z_energy = std::inner_product(z.begin(), z.end(), z.begin(), 0.0);
    if (!(z_energy > 0.0)) {
        RealizationRecord rec{};
        rec.seed = seed;
        rec.diverged = true;
        rec.nmse_db = 0.0;
        return rec;
    }
    const NoisyMeasurement meas =
        add_noise(z, snr_db, derive_seed(base_seed, point_index, realization, 2));
    return solve_one(op, meas.y, x, solver, seed, success_nmse);
}

void summarize(GridPointResult& pt) {
    std::vector<double> nmses;
    double succ = 0.0, runtime = 0.0, nmse_sum = 0.0;
    for (const auto& r : pt.records) {
        nmses.push_back(r.nmse_db);
        nmse_sum += r.nmse_db;
        runtime += r.runtime_s;
        if (r.success) succ += 1.0;
    }
    const double count = static_cast<double>(pt.records.size());
    pt.success_rate = succ / count;
    pt.median_nmse_db = median(std::move(nmses));
    pt.mean_nmse_db = nmse_sum / count;
    pt.mean_runtime_s = runtime / count;
}

} // namespace

double nmse_db(std::span<const double> x_true, std::span<const double> x_hat) {
    if (x_true.size() != x_hat.size())
        throw std::invalid_argument("nmse_db: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x_true.size(); ++i) {
        const double d = x_true[i] - x_hat[i];
        num += d * d;
        den += x_true[i] * x_true[i];
    }
    if (!(den > 0.0)) throw std::invalid_argument("nmse_db: zero truth");
    if (num == 0.0) return kNmseFloorDb;
    return std::max(10.0 * std::log10(num / den), kNmseFloorDb);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t point_index,
                          std::uint64_t realization_index,
                          std::uint64_t stream) {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ point_index);
    h = splitmix64(h ^ realization_index);
    return splitmix64(h ^ stream);
}

PtcResult run_ptc(const ExperimentGrid& grid) {
    if (grid.realizations == 0)
        throw std::invalid_argument("run_ptc: zero realizations");
    PtcResult out;
    const std::size_t cols = grid.grid_cols, rows = grid.grid_rows;
    out.table.points.resize(cols * rows);

    // Grid layout: points ordered column-major in delta then rho.
    for (std::size_t ci = 0; ci < cols; ++ci) {
        const double delta =
            cols == 1 ? grid.delta_min
                      : grid.delta_min + (grid.delta_max - grid.delta_min) *
                                             double(ci) / double(cols - 1);
        const std::size_t m = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(delta * double(grid.n))));
        for (std::size_t ri = 0; ri < rows; ++ri) {
            const double rho =
                rows == 1 ? grid.rho_min
                          : grid.rho_min + (grid.rho_max - grid.rho_min) *
                                               double(ri) / double(rows - 1);
            const std::size_t k =
                static_cast<std::size_t>(std::lround(rho * double(m)));
            auto& pt = out.table.points[ci * rows + ri];
            pt.m = m;
            pt.k = std::min(k, grid.n);
            pt.m_over_n = double(m) / double(grid.n);
            pt.k_over_m = double(pt.k) / double(m);
            pt.records.resize(grid.realizations);
        }
    }

    const std::size_t total = cols * rows * grid.realizations;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(total); ++t) {
        const std::size_t point = static_cast<std::size_t>(t) / grid.realizations;
        const std::size_t r = static_cast<std::size_t>(t) % grid.realizations;
        auto& pt = out.table.points[point];
        pt.records[r] = run_realization(
            grid.n, pt.m, pt.k, grid.signal, grid.matrix, grid.matrix_activity,
            grid.snr_db, grid.solver, grid.base_seed, point, r,
            grid.success_nmse);
    }
    for (auto& pt : out.table.points) summarize(pt);

    // Per-column contour: linear interpolation of the 0.5 success crossing.
    for (std::size_t ci = 0; ci < cols; ++ci) {
        const auto* col = &out.table.points[ci * rows];
        const double delta = col[0].m_over_n;
        double contour = col[rows - 1].k_over_m; // never drops below 0.5
        if (col[0].success_rate < 0.5) {
            contour = col[0].k_over_m;
        } else {
            for (std::size_t ri = 1; ri < rows; ++ri) {
                if (col[ri].success_rate < 0.5) {
                    const double s0 = col[ri - 1].success_rate;
                    const double s1 = col[ri].success_rate;
                    const double r0 = col[ri - 1].k_over_m;
                    const double r1 = col[ri].k_over_m;
                    contour = r0 + (0.5 - s0) * (r1 - r0) / (s1 - s0);
                    break;
                }
            }
        }
        out.contour.emplace_back(delta, contour);
    }
    return out;
}

SweepResult run_nmse_sweep(const SignalSpec& signal, MatrixKind matrix,
                           const std::vector<std::size_t>& m_values,
                           double snr_db, std::size_t realizations,
                           std::uint64_t base_seed, const SolverSpec& solver) {
    SweepResult out;
    out.points.resize(m_values.size());
    for (std::size_t pi = 0; pi < m_values.size(); ++pi) {
        out.points[pi].m = m_values[pi];
        out.points[pi].m_over_n = double(m_values[pi]) / double(signal.n);
        out.points[pi].records.resize(realizations);
    }

    const std::size_t total = m_values.size() * realizations;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(total); ++t) {
        const std::size_t pi = static_cast<std::size_t>(t) / realizations;
        const std::size_t r = static_cast<std::size_t>(t) % realizations;
        out.points[pi].records[r] = run_realization(
            signal.n, m_values[pi], signal.k, signal.kind, matrix, 1.0, snr_db,
            solver, base_seed, pi, r);
    }

    for (auto& pt : out.points) {
        std::vector<double> nmses;
        double runtime = 0.0, nmse_sum = 0.0;
        for (const auto& r : pt.records) {
            nmses.push_back(r.nmse_db);
            nmse_sum += r.nmse_db;
            runtime += r.runtime_s;
        }
        pt.median_nmse_db = median(std::move(nmses));
        pt.mean_nmse_db = nmse_sum / double(realizations);
        pt.mean_runtime_s = runtime / double(realizations);
    }

    for (const auto& pt : out.points)
        if (pt.median_nmse_db < out.knee_threshold_db) {
            if (!out.breakpoint || pt.m_over_n < *out.breakpoint)
                out.breakpoint = pt.m_over_n;
        }
    return out;
}

ScalingResult run_scaling(const std::vector<std::size_t>& n_values,
                          double m_over_n, double k_over_n, MatrixKind matrix,
                          double snr_db, std::size_t realizations,
                          std::uint64_t base_seed, const SolverSpec& solver) {
    ScalingResult out;
    for (std::size_t pi = 0; pi < n_values.size(); ++pi) {
        const std::size_t n = n_values[pi];
        const std::size_t m = static_cast<std::size_t>(
            std::lround(m_over_n * static_cast<double>(n)));
        const std::size_t k = static_cast<std::size_t>(
            std::lround(k_over_n * static_cast<double>(n)));
        SignalSpec sig;
        sig.kind = SignalKind::bernoulli_rademacher;
        sig.n = n;
        sig.k = k;
        std::vector<double> runtimes, nmses;
        // Serial over realizations: wall times are the measurement here.
        for (std::size_t r = 0; r < realizations; ++r) {
            RealizationRecord rec =
                run_realization(n, m, k, sig.kind, matrix, 1.0, snr_db, solver,
                                base_seed, pi, r);
            runtimes.push_back(rec.runtime_s);
            nmses.push_back(rec.nmse_db);
        }
        out.points.push_back({n, median(runtimes), median(nmses)});
    }

    // Least-squares slope of log runtime vs log n.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(out.points.size());
    for (const auto& p : out.points) {
        const double lx = std::log(static_cast<double>(p.n));
        const double ly = std::log(std::max(p.median_runtime_s, 1e-12));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    out.loglog_slope =
        cnt > 1 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
    return out;
}

std::string format_full_precision(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_ptc_csv(std::ostream& os, const PtcResult& ptc) {
    os << "m_over_n,k_over_m,success_rate,median_nmse_db\n";
    for (const auto& pt : ptc.table.points)
        os << format_full_precision(pt.m_over_n) << ','
           << format_full_precision(pt.k_over_m) << ','
           << format_full_precision(pt.success_rate) << ','
           << format_full_precision(pt.median_nmse_db) << '\n';
}

void write_contour_csv(std::ostream& os, const PtcResult& ptc) {
    os << "m_over_n,k_over_m\n";
    for (const auto& [delta, rho] : ptc.contour)
        os << format_full_precision(delta) << ',' << format_full_precision(rho)
           << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
    os << "m,m_over_n,median_nmse_db,mean_nmse_db\n";
    for (const auto& pt : sweep.points)
        os << pt.m << ',' << format_full_precision(pt.m_over_n) << ','
           << format_full_precision(pt.median_nmse_db) << ','
           << format_full_precision(pt.mean_nmse_db) << '\n';
}

void write_timing_csv(std::ostream& os, const ResultTable& table) {
    os << "m_over_n,k_over_m,mean_runtime_s\n";
    for (const auto& pt : table.points)
        os << format_full_precision(pt.m_over_n) << ','
           << format_full_precision(pt.k_over_m) << ','
           << format_full_precision(pt.mean_runtime_s) << '\n';
}

} // namespace emgamp
