#include "emgamp/gamp.hpp"

#include <algorithm>
#include <cmath>

namespace emgamp {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

GampState gamp_init(const LinearOperator& op, const GmPrior& prior) {
    prior.validate();
    GampState st;
    const std::size_t n = op.cols();
    const std::size_t m = op.rows();
    const double mean = prior.mean_value();
    const double var = prior.variance();
    st.x_hat.assign(n, mean);
    st.mu_x.assign(n, std::max(var, kVarianceFloor));
    st.s_hat.assign(m, 0.0);
    st.mu_s.assign(m, 0.0);
    st.p_hat.assign(m, 0.0);
    st.mu_p.assign(m, 0.0);
    st.z_hat.assign(m, 0.0);
    st.mu_z.assign(m, 0.0);
    st.r_hat.assign(n, 0.0);
    st.mu_r.assign(n, 0.0);
    st.iteration = 0;
    return st;
}

GampResult gamp_run(const LinearOperator& op, std::span<const double> y,
                    const GmPrior& prior, const NoiseModel& noise,
                    const GampConfig& cfg, const GampState* warm_start,
                    const GampTraceFn& trace) {
    if (y.size() != op.rows())
        throw std::invalid_argument("gamp_run: measurement length mismatch");
    const std::size_t n = op.cols();
    const std::size_t m = op.rows();
    const double floor = cfg.variance_floor;
    const double beta = cfg.damping;

    GampResult res;
    res.state = warm_start ? *warm_start : gamp_init(op, prior);
    GampState& st = res.state;

    for (int t = 1; t <= cfg.t_max; ++t) {
        // output-side variance and Onsager-corrected mean
        st.mu_p = op.squared_forward(st.mu_x);
        std::vector<double> ax = op.forward(st.x_hat);
        for (std::size_t i = 0; i < m; ++i) {
            st.mu_p[i] = std::max(st.mu_p[i], floor);
            st.p_hat[i] = ax[i] - st.mu_p[i] * st.s_hat[i];
        }

        // output-channel posterior moments
        output_moments(y, st.p_hat, st.mu_p, noise, st.z_hat, st.mu_z);

        // scaled residual update; mu_s may go negative in principle, clamp at the floor
        for (std::size_t i = 0; i < m; ++i) {
            const double mu_s =
                (1.0 - st.mu_z[i] / st.mu_p[i]) / st.mu_p[i];
            st.mu_s[i] = std::max(mu_s, floor);
            const double s_new = (st.z_hat[i] - st.p_hat[i]) / st.mu_p[i];
            st.s_hat[i] = beta * s_new + (1.0 - beta) * st.s_hat[i];
        }

        // input-side pseudo-measurement and its variance
        std::vector<double> denom = op.squared_adjoint(st.mu_s);
        std::vector<double> ats = op.adjoint(st.s_hat);
        for (std::size_t j = 0; j < n; ++j) {
            st.mu_r[j] = std::max(1.0 / std::max(denom[j], floor), floor);
            st.r_hat[j] = st.x_hat[j] + st.mu_r[j] * ats[j];
        }

        if (!all_finite(st.r_hat) || !all_finite(st.mu_r))
            throw GampDivergence("gamp_run: non-finite pseudo-measurement at t=" +
                                 std::to_string(t));

        // input-channel posterior moments
        res.stats = input_posterior(st.r_hat, st.mu_r, prior);
        std::vector<double> x_new, mu_x_new;
        input_moments(res.stats, x_new, mu_x_new);

        double diff = 0.0, ref = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double xd = beta * x_new[j] + (1.0 - beta) * st.x_hat[j];
            const double d = xd - st.x_hat[j];
            diff += d * d;
            ref += st.x_hat[j] * st.x_hat[j];
            st.x_hat[j] = xd;
            st.mu_x[j] = std::max(mu_x_new[j], floor);
        }
        if (!std::isfinite(diff))
            throw GampDivergence("gamp_run: non-finite estimate at t=" +
                                 std::to_string(t));

        st.iteration = t;
        res.iterations = t;
        if (trace) trace(t, ref > 0.0 ? diff / ref : diff, st.x_hat);

        // normalized-change stopping rule
        if (diff < cfg.tol * ref) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace emgamp
