#include "emgamp/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

using json = nlohmann::json;
using namespace emgamp;

namespace {

double parse_snr(const std::string& s) {
    if (s == "inf" || s == "noiseless")
        return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

json metadata_block() {
    return json{{"generated_at", iso_timestamp()}};
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << contents;
}

struct CommonSolverOpts {
    std::string mode = "sparse";
    int order = 0;
    bool use_mos = false;
    int i_max = 20;
    int t_max = 20;
    double tol_em = 1e-5;
    double tol_gamp = 1e-5;

    SolverSpec to_spec() const {
        SolverSpec s;
        s.use_mos = use_mos;
        s.em.mode = mode == "heavy" ? EmMode::heavy_tailed : EmMode::sparse;
        s.em.mixture_order = order;
        s.em.i_max = i_max;
        s.em.tol = tol_em;
        s.gamp.t_max = t_max;
        s.gamp.tol = tol_gamp;
        return s;
    }
};

void add_solver_opts(CLI::App* cmd, CommonSolverOpts& o) {
    cmd->add_option("--mode", o.mode, "prior mode: sparse|heavy")
        ->check(CLI::IsMember({"sparse", "heavy"}));
    cmd->add_option("--L", o.order, "mixture order (0 = mode default)");
    cmd->add_flag("--mos", o.use_mos, "select mixture order automatically");
    cmd->add_option("--em-iters", o.i_max, "max EM iterations");
    cmd->add_option("--gamp-iters", o.t_max, "max GAMP iterations per EM pass");
}

int cmd_recover(const std::string& signal, std::size_t n, std::size_t m,
                std::size_t k, const std::string& matrix,
                const std::string& snr, std::uint64_t seed,
                const CommonSolverOpts& opts, const std::string& out_path) {
    if (k > m)
        throw CLI::ValidationError("recover", "requires k <= m");
    if (m > n)
        throw CLI::ValidationError("recover", "requires m <= n");

    SignalSpec sspec;
    sspec.kind = parse_signal_kind(signal);
    sspec.n = n;
    sspec.k = k;
    MatrixSpec mspec;
    mspec.kind = parse_matrix_kind(matrix);
    mspec.m = m;
    mspec.n = n;

    const LinearOperator op = gen_matrix(mspec, derive_seed(seed, 0, 0, 1));
    const std::vector<double> x = gen_signal(sspec, derive_seed(seed, 0, 0, 0));
    const NoisyMeasurement meas =
        add_noise(op.forward(x), parse_snr(snr), derive_seed(seed, 0, 0, 2));

    const SolverSpec solver = opts.to_spec();
    std::vector<double> x_hat, pi;
    json learned;
    if (solver.use_mos) {
        MosResult mos = mos_select(meas.y, op, solver.em, solver.gamp, solver.mos);
        x_hat = mos.fit.x_hat;
        pi = mos.fit.pi;
        learned["order"] = mos.order;
        learned["lambda"] = mos.fit.prior.lambda;
        learned["psi"] = mos.fit.noise.psi;
    } else {
        EmResult em = em_gm_amp(meas.y, op, solver.em, solver.gamp);
        x_hat = em.x_hat;
        pi = em.pi;
        learned["order"] = em.prior.order();
        learned["lambda"] = em.prior.lambda;
        learned["psi"] = em.noise.psi;
        for (const auto& c : em.prior.components)
            learned["components"].push_back(
                {{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
    }

    const double nmse = nmse_db(x, x_hat);
    std::cout << "nmse_db=" << format_full_precision(nmse) << "\n";

    if (!out_path.empty()) {
        json out;
        out["payload"] = {{"nmse_db", nmse},
                          {"psi_true", meas.psi_true},
                          {"learned", learned},
                          {"x_hat", x_hat},
                          {"pi", pi}};
        out["metadata"] = metadata_block();
        write_file(out_path, out.dump(2));
    }
    return 0;
}

struct PtcPreset {
    SignalKind signal;
    MatrixKind matrix;
};

ExperimentGrid make_desk_grid(const std::string& preset) {
    ExperimentGrid grid;
    grid.n = 500;
    grid.grid_cols = 8;
    grid.grid_rows = 8;
    grid.realizations = 25;
    if (preset == "desk-bg")
        grid.signal = SignalKind::bernoulli_gaussian;
    else if (preset == "desk-bernoulli")
        grid.signal = SignalKind::bernoulli;
    else if (preset == "desk-br")
        grid.signal = SignalKind::bernoulli_rademacher;
    else
        throw CLI::ValidationError("ptc", "unknown preset: " + preset);
    return grid;
}

int cmd_ptc(const std::string& preset, const std::string& signal,
            std::size_t n, std::size_t grid_size, std::size_t realizations,
            std::uint64_t seed, const CommonSolverOpts& opts,
            const std::string& out_path) {
    ExperimentGrid grid;
    if (!preset.empty()) {
        grid = make_desk_grid(preset);
    } else {
        grid.signal = parse_signal_kind(signal);
        grid.n = n;
        grid.grid_cols = grid.grid_rows = grid_size;
        grid.realizations = realizations;
    }
    grid.base_seed = seed;
    grid.solver = opts.to_spec();

    const PtcResult ptc = run_ptc(grid);

    std::ostringstream csv, contour, timing;
    write_ptc_csv(csv, ptc);
    write_contour_csv(contour, ptc);
    write_timing_csv(timing, ptc.table);
    write_file(out_path, csv.str());
    write_file(out_path + ".contour.csv", contour.str());
    write_file(out_path + ".timing.csv", timing.str());

    std::cout << "grid=" << grid.grid_cols << "x" << grid.grid_rows
              << " realizations=" << grid.realizations << " rows="
              << ptc.table.points.size() << "\n";
    return 0;
}

int cmd_sweep(const std::string& signal, std::size_t n, std::size_t k,
              const std::string& snr, const std::string& m_list,
              std::size_t realizations, std::uint64_t seed,
              const CommonSolverOpts& opts, const std::string& out_path) {
    SignalSpec sspec;
    sspec.kind = parse_signal_kind(signal);
    sspec.n = n;
    sspec.k = k;
    std::vector<std::size_t> m_values;
    std::stringstream ss(m_list);
    for (std::string tok; std::getline(ss, tok, ',');)
        m_values.push_back(std::stoul(tok));
    if (m_values.empty())
        throw CLI::ValidationError("sweep", "empty M list");
    for (std::size_t m : m_values)
        if (k > m || m > n)
            throw CLI::ValidationError("sweep", "requires k <= m <= n");

    const SweepResult sweep =
        run_nmse_sweep(sspec, MatrixKind::iid_gaussian, m_values,
                       parse_snr(snr), realizations, seed, opts.to_spec());

    std::ostringstream csv;
    write_sweep_csv(csv, sweep);
    write_file(out_path, csv.str());

    std::cout << "points=" << sweep.points.size() << " breakpoint=";
    if (sweep.breakpoint)
        std::cout << format_full_precision(*sweep.breakpoint);
    else
        std::cout << "none";
    std::cout << "\n";
    return 0;
}

int cmd_scaling(const std::string& n_list, const std::string& matrix,
                double m_over_n, double k_over_n, const std::string& snr,
                std::size_t realizations, std::uint64_t seed,
                const CommonSolverOpts& opts, const std::string& out_path) {
    std::vector<std::size_t> n_values;
    std::stringstream ss(n_list);
    for (std::string tok; std::getline(ss, tok, ',');)
        n_values.push_back(std::stoul(tok));
    if (n_values.empty())
        throw CLI::ValidationError("scaling", "empty n list");

    const ScalingResult scaling = run_scaling(
        n_values, m_over_n, k_over_n, parse_matrix_kind(matrix),
        parse_snr(snr), realizations, seed, opts.to_spec());

    std::ostringstream csv;
    csv << "n,median_runtime_s,median_nmse_db\n";
    for (const auto& p : scaling.points)
        csv << p.n << ',' << format_full_precision(p.median_runtime_s) << ','
            << format_full_precision(p.median_nmse_db) << '\n';
    write_file(out_path, csv.str());

    std::cout << "slope=" << format_full_precision(scaling.loglog_slope)
              << "\n";
    return 0;
}

int cmd_mos_demo(std::size_t n, std::size_t m, double lambda,
                 const std::string& snr, std::uint64_t seed,
                 const CommonSolverOpts& opts, const std::string& out_path) {
    SignalSpec sspec;
    sspec.kind = SignalKind::triangular_mixture;
    sspec.n = n;
    sspec.k = static_cast<std::size_t>(std::lround(lambda * double(n)));
    MatrixSpec mspec;
    mspec.kind = MatrixKind::iid_gaussian;
    mspec.m = m;
    mspec.n = n;

    const LinearOperator op = gen_matrix(mspec, derive_seed(seed, 0, 0, 1));
    const std::vector<double> x = gen_signal(sspec, derive_seed(seed, 0, 0, 0));
    const NoisyMeasurement meas =
        add_noise(op.forward(x), parse_snr(snr), derive_seed(seed, 0, 0, 2));

    SolverSpec solver = opts.to_spec();
    solver.mos.initial_order = 1;
    MosResult mos = mos_select(meas.y, op, solver.em, solver.gamp, solver.mos);

    json out;
    json sweeps = json::array();
    for (const auto& sweep : mos.trace) {
        json cands = json::array();
        for (const auto& c : sweep.candidates)
            cands.push_back({{"L", c.order},
                             {"log_likelihood", c.log_likelihood},
                             {"penalty", c.penalty},
                             {"score", c.score}});
        sweeps.push_back({{"j", sweep.iteration},
                          {"selected_L", sweep.selected_order},
                          {"candidates", cands}});
    }
    const double nmse = nmse_db(x, mos.fit.x_hat);
    out["payload"] = {{"final_L", mos.order},
                      {"nmse_db", nmse},
                      {"sweeps", sweeps}};
    out["metadata"] = metadata_block();
    if (!out_path.empty()) write_file(out_path, out.dump(2));

    std::cout << "final_L=" << mos.order
              << " nmse_db=" << format_full_precision(nmse) << "\n";
    return 0;
}

int cmd_plots(const std::vector<std::string>& inputs,
              const std::string& out_path) {
    std::ostringstream script;
    script << "set datafile separator ','\nset key outside\n";
    int plotted = 0;
    for (const auto& in : inputs) {
        std::ifstream is(in);
        if (!is) throw std::runtime_error("missing result file: " + in);
        std::string header;
        std::getline(is, header);
        std::string second;
        if (!std::getline(is, second))
            throw std::runtime_error("empty result file: " + in);
        if (header.rfind("m_over_n,k_over_m", 0) == 0) {
            script << "plot '" << in
                   << "' using 1:2 skip 1 with linespoints title 'contour'\n";
        } else if (header.rfind("m,m_over_n", 0) == 0) {
            script << "plot '" << in
                   << "' using 2:3 skip 1 with linespoints title 'median NMSE'\n";
        } else {
            script << "plot '" << in << "' using 1:2 skip 1 with points\n";
        }
        ++plotted;
    }
    if (plotted == 0) throw std::runtime_error("no inputs");
    write_file(out_path, script.str());
    std::cout << "plots=" << plotted << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-mixture AMP sparse recovery toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags override");

    int jobs = 0;
    if (const char* env = std::getenv("EMGAMP_JOBS")) jobs = std::atoi(env);
    app.add_option("--jobs", jobs, "worker threads (0 = runtime default)");

    CommonSolverOpts opts;

    // recover
    auto* rec = app.add_subcommand("recover", "single-instance recovery");
    std::string signal = "bg", matrix = "gaussian", snr = "25";
    std::size_t n = 1000, m = 500, k = 100;
    std::uint64_t seed = 1;
    std::string out_path;
    rec->add_option("--signal", signal, "signal kind");
    rec->add_option("--matrix", matrix, "matrix ensemble");
    rec->add_option("--n", n);
    rec->add_option("--m", m);
    rec->add_option("--k", k);
    rec->add_option("--snr", snr, "SNR in dB, or 'inf'");
    rec->add_option("--seed", seed);
    rec->add_option("--out", out_path, "summary JSON path");
    add_solver_opts(rec, opts);

    // ptc
    auto* ptc = app.add_subcommand("ptc", "phase-transition grid");
    std::string preset;
    std::size_t grid_size = 8, realizations = 25;
    std::string ptc_out = "ptc.csv";
    ptc->add_option("--preset", preset, "desk-bg|desk-bernoulli|desk-br");
    ptc->add_option("--signal", signal);
    ptc->add_option("--n", n);
    ptc->add_option("--grid", grid_size, "grid side length");
    ptc->add_option("--realizations", realizations);
    ptc->add_option("--seed", seed);
    ptc->add_option("--out", ptc_out)->required();
    add_solver_opts(ptc, opts);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "NMSE versus M");
    std::string m_list = "300,350,400,450,500,550,600";
    std::string sweep_out = "sweep.csv";
    sweep->add_option("--signal", signal);
    sweep->add_option("--n", n);
    sweep->add_option("--k", k);
    sweep->add_option("--snr", snr);
    sweep->add_option("--m-list", m_list, "comma-separated M values");
    sweep->add_option("--realizations", realizations);
    sweep->add_option("--seed", seed);
    sweep->add_option("--out", sweep_out)->required();
    add_solver_opts(sweep, opts);

    // scaling
    auto* scaling = app.add_subcommand("scaling", "runtime versus n");
    std::string n_list = "512,1024,2048,4096";
    double m_over_n = 0.5, k_over_n = 0.1;
    std::string scaling_out = "scaling.csv";
    scaling->add_option("--n-list", n_list);
    scaling->add_option("--matrix", matrix);
    scaling->add_option("--m-over-n", m_over_n);
    scaling->add_option("--k-over-n", k_over_n);
    scaling->add_option("--snr", snr);
    scaling->add_option("--realizations", realizations);
    scaling->add_option("--seed", seed);
    scaling->add_option("--out", scaling_out)->required();
    add_solver_opts(scaling, opts);

    // mos-demo
    auto* mosd = app.add_subcommand("mos-demo", "model-order selection demo");
    double lambda = 0.1;
    std::string mos_out;
    mosd->add_option("--n", n);
    mosd->add_option("--m", m);
    mosd->add_option("--lambda", lambda);
    mosd->add_option("--snr", snr);
    mosd->add_option("--seed", seed);
    mosd->add_option("--out", mos_out);
    add_solver_opts(mosd, opts);

    // plots
    auto* plots = app.add_subcommand("plots", "emit gnuplot scripts");
    std::vector<std::string> plot_inputs;
    std::string plots_out = "plots.gp";
    plots->add_option("--in", plot_inputs, "result CSV files")->required();
    plots->add_option("--out", plots_out);

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif

    try {
        if (rec->parsed())
            return cmd_recover(signal, n, m, k, matrix, snr, seed, opts,
                               out_path);
        if (ptc->parsed())
            return cmd_ptc(preset, signal, n, grid_size, realizations, seed,
                           opts, ptc_out);
        if (sweep->parsed())
            return cmd_sweep(signal, n, k, snr, m_list, realizations, seed,
                             opts, sweep_out);
        if (scaling->parsed())
            return cmd_scaling(n_list, matrix, m_over_n, k_over_n, snr,
                               realizations, seed, opts, scaling_out);
        if (mosd->parsed())
            return cmd_mos_demo(n, m, lambda, snr, seed, opts, mos_out);
        if (plots->parsed()) return cmd_plots(plot_inputs, plots_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
