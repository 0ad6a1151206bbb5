// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure.  Each criterion is self-contained and uses only fixed seeds.

#include "emgamp/harness.hpp"

#include "mmse_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

using namespace emgamp;

namespace {

int failures = 0;

void report(int idx, bool pass, const char* name, const std::string& detail) {
    std::printf("criterion %2d [%s] %s  (%s)\n", idx, pass ? "PASS" : "FAIL",
                name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        return 0.5 * (lo + hi);
    }
    return hi;
}

// ---------------------------------------------------------------- criterion 1

struct Quad {
    double pi, mean, var;
};

Quad quad_posterior(double r, double mu_r, const GmPrior& prior) {
    double lo = r - 12.0 * std::sqrt(mu_r), hi = r + 12.0 * std::sqrt(mu_r);
    for (const auto& c : prior.components) {
        lo = std::min(lo, c.mean - 12.0 * std::sqrt(c.var));
        hi = std::max(hi, c.mean + 12.0 * std::sqrt(c.var));
    }
    const int steps = 40000;
    const double h = (hi - lo) / steps;
    double z0 = 0.0, z1 = 0.0, z2 = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double x = lo + h * i;
        double slab = 0.0;
        for (const auto& c : prior.components)
            slab += c.weight * normal_pdf(x, c.mean, c.var);
        const double f = slab * normal_pdf(r, x, mu_r);
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        z0 += w * f;
        z1 += w * f * x;
        z2 += w * f * x * x;
    }
    z0 *= h / 3.0;
    z1 *= h / 3.0;
    z2 *= h / 3.0;
    const double spike = (1.0 - prior.lambda) * normal_pdf(r, 0.0, mu_r);
    const double act = prior.lambda * z0;
    Quad q;
    q.pi = act / (spike + act);
    q.mean = prior.lambda * z1 / (spike + act);
    q.var = prior.lambda * z2 / (spike + act) - q.mean * q.mean;
    return q;
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        GmPrior prior;
        prior.lambda = 0.05 + 0.9 * u(rng);
        const int order = 1 + trial % 4;
        double wsum = 0.0;
        for (int l = 0; l < order; ++l) {
            GmComponent c{0.1 + u(rng), 4.0 * (u(rng) - 0.5),
                          0.05 + 2.0 * u(rng)};
            wsum += c.weight;
            prior.components.push_back(c);
        }
        for (auto& c : prior.components) c.weight /= wsum;

        std::vector<double> r{8.0 * (u(rng) - 0.5)}, mu{0.05 + 2.0 * u(rng)};
        auto st = input_posterior(r, mu, prior);
        std::vector<double> x_hat, mu_x;
        input_moments(st, x_hat, mu_x);
        auto q = quad_posterior(r[0], mu[0], prior);
        worst = std::max({worst, std::abs(st.pi[0] - q.pi),
                          std::abs(x_hat[0] - q.mean),
                          std::abs(mu_x[0] - q.var)});
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    std::ostringstream d;
    d << "max abs error " << worst << ", " << secs << " s";
    report(1, worst < 1e-6 && secs < 10.0, "channel-oracle equivalence",
           d.str());
}

// ---------------------------------------------------------------- criterion 2

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = 12, m = 6, k = 2;
    int within = 0;
    for (int seed = 1; seed <= 20; ++seed) {
        SignalSpec ss;
        ss.n = n;
        ss.k = k;
        MatrixSpec ms;
        ms.m = m;
        ms.n = n;
        auto x = gen_signal(ss, derive_seed(seed, 0, 0, 0));
        auto op = gen_matrix(ms, derive_seed(seed, 0, 0, 1));
        auto meas = add_noise(op.forward(x), 25.0, derive_seed(seed, 0, 0, 2));

        GmPrior prior;
        prior.lambda = double(k) / double(n);
        prior.components = {{1.0, 0.0, 1.0}};
        NoiseModel noise{std::max(meas.psi_true, 1e-12)};
        GampConfig cfg;
        cfg.t_max = 500;
        cfg.tol = 1e-12;
        cfg.damping = 0.7;
        double gamp_nmse;
        try {
            auto res = gamp_run(op, meas.y, prior, noise, cfg);
            gamp_nmse = nmse_db(x, res.state.x_hat);
        } catch (const GampDivergence&) {
            continue;
        }
        auto oracle = mmse_oracle::estimate(op.densify(), m, n, meas.y,
                                            prior.lambda, 1.0, noise.psi);
        const double oracle_nmse = nmse_db(x, oracle);
        if (gamp_nmse <= oracle_nmse + 2.0) ++within;
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    std::ostringstream d;
    d << within << "/20 within 2 dB of the exhaustive MMSE, " << secs << " s";
    report(2, within >= 16 && secs < 30.0, "exact-MMSE oracle", d.str());
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);

    // (a) L=1 reduction identities at machine precision
    bool reduction_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t nn = 40;
        PosteriorStats st;
        st.n = nn;
        st.order = 1;
        st.pi.resize(nn);
        st.beta_bar.assign(nn, 1.0);
        st.gamma.resize(nn);
        st.nu.resize(nn);
        st.log_zeta.assign(nn, 0.0);
        for (std::size_t i = 0; i < nn; ++i) {
            st.pi[i] = u(rng);
            st.gamma[i] = 2.0 * g(rng);
            st.nu[i] = 0.05 + u(rng);
        }
        double spi = 0.0, spg = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            spi += st.pi[i];
            spg += st.pi[i] * st.gamma[i];
        }
        const double theta_bg = spg / spi;
        if (em_update_theta(st, 0.0, 0).value != theta_bg) reduction_ok = false;
        const double theta_prev = g(rng);
        double spv = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            const double dd = theta_prev - st.gamma[i];
            spv += st.pi[i] * (dd * dd + st.nu[i]);
        }
        if (em_update_phi(st, theta_prev, 1.0, 0).value != spv / spi)
            reduction_ok = false;
        auto w = em_update_omega(st, {1.0});
        if (w.size() != 1 || std::abs(w[0] - 1.0) > 1e-15) reduction_ok = false;
    }

    // (b) scalar updates match grid maximization of their surrogates
    const std::size_t mm = 50;
    std::vector<double> y(mm), z(mm), mz(mm);
    for (std::size_t i = 0; i < mm; ++i) {
        y[i] = g(rng);
        z[i] = g(rng);
        mz[i] = 0.01 + 0.3 * u(rng);
    }
    const double psi = em_update_psi(y, z, mz);
    double best_p = 0.0, best_v = -1e300;
    for (double p = 0.01; p < 8.0; p += 1e-4) {
        double acc = 0.0;
        for (std::size_t i = 0; i < mm; ++i) {
            const double dd = y[i] - z[i];
            acc += -0.5 * std::log(p) - (dd * dd + mz[i]) / (2.0 * p);
        }
        if (acc > best_v) {
            best_v = acc;
            best_p = p;
        }
    }
    const bool psi_ok = std::abs(psi - best_p) < 2e-4;

    PosteriorStats st;
    st.n = 30;
    st.order = 1;
    st.pi.resize(30);
    st.beta_bar.assign(30, 1.0);
    st.gamma.assign(30, 0.0);
    st.nu.assign(30, 0.1);
    st.log_zeta.assign(30, 0.0);
    for (auto& p : st.pi) p = u(rng);
    const double lam = em_update_lambda(st);
    double best_l = 0.0;
    best_v = -1e300;
    for (double l = 1e-4; l < 1.0; l += 1e-4) {
        double acc = 0.0;
        for (double p : st.pi)
            acc += p * std::log(l) + (1.0 - p) * std::log(1.0 - l);
        if (acc > best_v) {
            best_v = acc;
            best_l = l;
        }
    }
    const bool lam_ok = std::abs(lam - best_l) < 2e-4;

    std::ostringstream d;
    d << "reduction " << (reduction_ok ? "exact" : "broken") << ", psi gap "
      << std::abs(psi - best_p) << ", lambda gap " << std::abs(lam - best_l);
    report(3, reduction_ok && psi_ok && lam_ok,
           "EM fixed-point and reduction identities", d.str());
}

// ------------------------------------------------------- criteria 4, 5 and 10

SolverSpec noiseless_solver() {
    SolverSpec s;
    // Noiseless phase transitions need the solver to resolve below the 1e-6
    // success threshold; the default stopping tolerance stalls around -52 dB,
    // and cells near the transition need far more EM passes than the default
    // cap before the learned prior settles.
    s.em.tol = 1e-10;
    s.gamp.tol = 1e-10;
    s.em.i_max = 100;
    s.gamp.t_max = 50;
    return s;
}

std::string ptc_payload(const PtcResult& ptc) {
    std::ostringstream os;
    write_ptc_csv(os, ptc);
    write_contour_csv(os, ptc);
    return os.str();
}

PtcResult run_criterion4_grid(SignalKind kind) {
    ExperimentGrid grid;
    grid.n = 500;
    grid.grid_cols = 8;
    grid.grid_rows = 8;
    grid.realizations = 25;
    grid.base_seed = 41;
    grid.signal = kind;
    grid.solver = noiseless_solver();
    return run_ptc(grid);
}

bool contour_dominates_lasso(const PtcResult& ptc, std::ostringstream& d) {
    bool ok = true;
    for (const auto& [delta, rho] : ptc.contour) {
        const double lasso = rho_se(delta);
        if (rho < lasso) {
            ok = false;
            d << " [col " << delta << ": " << rho << " < " << lasso << "]";
        }
    }
    return ok;
}

std::pair<double, double> criterion_5_medians(std::uint64_t base_seed) {
    SignalSpec sig;
    sig.kind = SignalKind::bernoulli_rademacher;
    sig.n = 1000;
    sig.k = 100;
    SolverSpec gm3;
    SolverSpec bg1;
    bg1.em.mixture_order = 1;
    auto sweep3 = run_nmse_sweep(sig, MatrixKind::iid_gaussian, {500}, 25.0,
                                 50, base_seed, gm3);
    auto sweep1 = run_nmse_sweep(sig, MatrixKind::iid_gaussian, {500}, 25.0,
                                 50, base_seed, bg1);
    return {sweep3.points[0].median_nmse_db, sweep1.points[0].median_nmse_db};
}

void criteria_4_5_10() {
    auto bg = run_criterion4_grid(SignalKind::bernoulli_gaussian);
    auto bern = run_criterion4_grid(SignalKind::bernoulli);
    std::ostringstream d4;
    const bool bg_ok = contour_dominates_lasso(bg, d4);
    const bool bern_ok = contour_dominates_lasso(bern, d4);
    std::ostringstream head;
    head << "BG " << (bg_ok ? "above" : "below") << ", Bernoulli "
         << (bern_ok ? "above" : "below") << " the LASSO curve" << d4.str();
    report(4, bg_ok && bern_ok, "noiseless PTC dominance", head.str());

    auto [gm_med, bg_med] = criterion_5_medians(51);
    std::ostringstream d5;
    d5 << "L=3 median " << gm_med << " dB vs L=1 median " << bg_med << " dB";
    report(5, gm_med <= bg_med - 5.0, "noisy BR advantage", d5.str());

    // criterion 10: identical seeds reproduce the CSV payloads byte for byte
    auto bg2 = run_criterion4_grid(SignalKind::bernoulli_gaussian);
    const bool grid_same = ptc_payload(bg) == ptc_payload(bg2);
    auto [gm_med2, bg_med2] = criterion_5_medians(51);
    const bool sweep_same =
        format_full_precision(gm_med) == format_full_precision(gm_med2) &&
        format_full_precision(bg_med) == format_full_precision(bg_med2);
    std::ostringstream d10;
    d10 << "ptc payload " << (grid_same ? "identical" : "differs")
        << ", sweep medians " << (sweep_same ? "identical" : "differ");
    report(10, grid_same && sweep_same, "determinism", d10.str());
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
    SignalSpec sig;
    sig.kind = SignalKind::students_t;
    sig.n = 1000;
    sig.k = 1000; // i.i.d heavy-tailed signal: every coefficient active
    // Sparse-mode baseline at L=1: the single-Gaussian mean-learning
    // counterpart of the zero-mean heavy-tailed mixture.
    SolverSpec sparse;
    sparse.em.mixture_order = 1;
    SolverSpec heavy;
    heavy.em.mode = EmMode::heavy_tailed;
    auto sweep_h = run_nmse_sweep(sig, MatrixKind::iid_gaussian, {500}, 25.0,
                                  50, 61, heavy);
    auto sweep_s = run_nmse_sweep(sig, MatrixKind::iid_gaussian, {500}, 25.0,
                                  50, 61, sparse);
    const double h = sweep_h.points[0].median_nmse_db;
    const double s = sweep_s.points[0].median_nmse_db;

    // means stay pinned at zero throughout a heavy-tailed run
    auto x = gen_signal(sig, derive_seed(62, 0, 0, 0));
    MatrixSpec ms;
    ms.m = 500;
    ms.n = 1000;
    auto op = gen_matrix(ms, derive_seed(62, 0, 0, 1));
    auto meas = add_noise(op.forward(x), 25.0, derive_seed(62, 0, 0, 2));
    auto res = em_gm_amp(meas.y, op, heavy.em, heavy.gamp);
    bool zero_means = true;
    for (const auto& entry : res.trace)
        for (const auto& c : entry.prior.components)
            if (c.mean != 0.0) zero_means = false;

    std::ostringstream d;
    d << "heavy " << h << " dB vs sparse " << s << " dB, means "
      << (zero_means ? "pinned" : "drifted");
    report(6, h <= s - 1.0 && zero_means, "heavy-tailed mode", d.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
    const std::size_t n = 1000, m = 500, k = 100;
    std::vector<double> mos_nmse, fixed_nmse;
    int monotone = 0, terminated = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        SignalSpec ss;
        ss.kind = SignalKind::triangular_mixture;
        ss.n = n;
        ss.k = k;
        MatrixSpec ms;
        ms.m = m;
        ms.n = n;
        auto x = gen_signal(ss, derive_seed(700 + seed, 0, 0, 0));
        auto op = gen_matrix(ms, derive_seed(700 + seed, 0, 0, 1));
        auto meas =
            add_noise(op.forward(x), 20.0, derive_seed(700 + seed, 0, 0, 2));

        EmConfig cfg;
        GampConfig gc;
        MosConfig mc;
        mc.initial_order = 1;
        mc.j_max = 5;
        auto mos = mos_select(meas.y, op, cfg, gc, mc);
        if (int(mos.trace.size()) <= mc.j_max) ++terminated;
        mos_nmse.push_back(nmse_db(x, mos.fit.x_hat));

        bool mono = true;
        double prev = 1e300;
        for (const auto& sweep : mos.trace) {
            const double v = nmse_db(x, sweep.selected_x_hat);
            if (v > prev + 1e-9) mono = false;
            prev = v;
        }
        if (mono) ++monotone;

        EmConfig three;
        three.mixture_order = 3;
        auto fixed = em_gm_amp(meas.y, op, three, gc);
        fixed_nmse.push_back(nmse_db(x, fixed.x_hat));
    }
    const double mos_med = median_of(mos_nmse);
    const double fixed_med = median_of(fixed_nmse);
    std::ostringstream d;
    d << "MOS median " << mos_med << " dB vs fixed-L3 " << fixed_med
      << " dB, monotone " << monotone << "/" << seeds << ", terminated "
      << terminated << "/" << seeds;
    report(7,
           terminated == seeds && mos_med <= fixed_med + 1.0 &&
               monotone >= int(0.7 * seeds),
           "model-order selection demo", d.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
    // Fixed iteration counts: the slope should measure how the kernels scale
    // with n, not how the adaptive stopping rules happen to fire.
    SolverSpec solver;
    solver.em.tol = 0.0;
    solver.gamp.tol = 0.0;
    solver.em.i_max = 4;
    solver.gamp.t_max = 10;
    const std::vector<std::size_t> ns{512, 1024, 2048, 4096};
    auto dense = run_scaling(ns, 0.5, 0.1, MatrixKind::iid_gaussian, 25.0, 3,
                             81, solver);
    auto fast = run_scaling(ns, 0.5, 0.1, MatrixKind::row_sampled_dct, 25.0, 3,
                            82, solver);
    std::ostringstream d;
    d << "dense slope " << dense.loglog_slope << ", dct slope "
      << fast.loglog_slope;
    const bool ok = dense.loglog_slope >= 1.7 && dense.loglog_slope <= 2.3 &&
                    fast.loglog_slope >= 0.8 && fast.loglog_slope <= 1.5;
    report(8, ok, "complexity scaling", d.str());
}

// ---------------------------------------------------------------- criterion 9

double ensemble_success(MatrixKind kind, double activity) {
    ExperimentGrid grid;
    grid.n = 500;
    grid.grid_cols = 1;
    grid.grid_rows = 1;
    grid.delta_min = grid.delta_max = 0.5;
    grid.rho_min = grid.rho_max = 0.3;
    grid.realizations = 20;
    grid.base_seed = 91;
    grid.matrix = kind;
    grid.matrix_activity = activity;
    grid.solver = noiseless_solver();
    return run_ptc(grid).table.points[0].success_rate;
}

void criterion_9() {
    const double gauss = ensemble_success(MatrixKind::iid_gaussian, 1.0);
    const double unif = ensemble_success(MatrixKind::iid_uniform, 1.0);
    const double br = ensemble_success(MatrixKind::iid_bernoulli_rademacher, 1.0);
    const double dct = ensemble_success(MatrixKind::row_sampled_dct, 1.0);
    const double cauchy = ensemble_success(MatrixKind::iid_cauchy, 1.0);
    std::ostringstream d;
    d << "gaussian " << gauss << ", uniform " << unif << ", br " << br
      << ", dct " << dct << ", cauchy " << cauchy;
    const bool ok = gauss >= 0.9 && unif >= 0.9 && br >= 0.9 && dct >= 0.9 &&
                    cauchy < gauss;
    report(9, ok, "matrix-ensemble robustness", d.str());
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criteria_4_5_10();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%s (%d failing)\n",
                failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT",
                failures);
    return failures == 0 ? 0 : 1;
}
