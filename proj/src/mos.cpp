#include "emgamp/mos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace emgamp {

namespace {

// log of the active-component mixture density at x.
double log_mixture_pdf(const GmPrior& prior, double x) {
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(prior.order());
    for (std::size_t k = 0; k < prior.order(); ++k) {
        const auto& c = prior.components[k];
        logs[k] = c.weight > 0.0
                      ? std::log(c.weight) + log_normal_pdf(x, c.mean, c.var)
                      : -std::numeric_limits<double>::infinity();
        max_log = std::max(max_log, logs[k]);
    }
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - max_log);
    return max_log + std::log(acc);
}

int parameter_count(int order, EmMode mode) {
    return mode == EmMode::sparse ? 3 * order - 1 : 2 * order - 1;
}

// Split the largest-weight component of a fitted prior to seed the next
// candidate order.
GmPrior split_largest(const GmPrior& fit, EmMode mode) {
    GmPrior out = fit;
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.order(); ++k)
        if (out.components[k].weight > out.components[best].weight) best = k;
    GmComponent a = out.components[best];
    const double shift = 0.5 * std::sqrt(a.var);
    a.weight *= 0.5;
    GmComponent b = a;
    if (mode == EmMode::sparse) {
        // Narrow the children so they separate: keeping the parent variance
        // makes the pair overlap almost completely and the refit stalls
        // before the means can migrate apart.
        a.var *= 0.25;
        b.var = a.var;
        a.mean -= shift;
        b.mean += shift;
    } else {
        // Means are pinned at zero, so split along the variance axis instead.
        a.var *= 0.5;
        b.var *= 2.0;
    }
    out.components[best] = a;
    out.components.push_back(b);
    out.normalize();
    return out;
}

// The weighted point-mass sample that mos_metric scores: locations
// gamma_{n,l} carrying weight pi_n * beta_bar_{n,l}.
struct StatsSample {
    std::vector<double> x, w;
};

StatsSample collect_sample(const PosteriorStats& stats) {
    StatsSample s;
    const std::size_t L = stats.order;
    for (std::size_t i = 0; i < stats.n; ++i) {
        if (stats.pi[i] <= 0.0) continue;
        for (std::size_t l = 0; l < L; ++l) {
            const double w = stats.pi[i] * stats.beta_bar[i * L + l];
            if (w <= 0.0) continue;
            s.x.push_back(stats.gamma[i * L + l]);
            s.w.push_back(w);
        }
    }
    return s;
}

double sample_log_likelihood(const StatsSample& s, const GmPrior& prior) {
    double ll = 0.0;
    for (std::size_t j = 0; j < s.x.size(); ++j)
        ll += s.w[j] * log_mixture_pdf(prior, s.x[j]);
    return ll;
}

// Weighted EM fit of the active-component mixture to the point-mass sample.
// This maximizes exactly the likelihood term that mos_metric scores, which is
// what makes the penalty-free metric non-decreasing in the candidate order.
GmPrior fit_gm_to_sample(const StatsSample& s, GmPrior seed, EmMode mode) {
    const std::size_t L = seed.order();
    const std::size_t J = s.x.size();
    std::vector<double> logs(L);
    for (int it = 0; it < 500; ++it) {
        std::vector<double> sw(L, 0.0), sx(L, 0.0), sxx(L, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            double max_log = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < L; ++k) {
                const auto& c = seed.components[k];
                logs[k] = c.weight > 0.0
                              ? std::log(c.weight) +
                                    log_normal_pdf(s.x[j], c.mean, c.var)
                              : -std::numeric_limits<double>::infinity();
                max_log = std::max(max_log, logs[k]);
            }
            double norm = 0.0;
            for (std::size_t k = 0; k < L; ++k) {
                logs[k] = std::exp(logs[k] - max_log);
                norm += logs[k];
            }
            for (std::size_t k = 0; k < L; ++k) {
                const double r = s.w[j] * logs[k] / norm;
                sw[k] += r;
                sx[k] += r * s.x[j];
                sxx[k] += r * s.x[j] * s.x[j];
            }
        }
        const double total =
            std::accumulate(sw.begin(), sw.end(), 0.0);
        double change = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            auto& c = seed.components[k];
            const double w_new = total > 0.0 ? sw[k] / total : c.weight;
            double mean_new = c.mean;
            if (mode == EmMode::sparse && sw[k] > 0.0) mean_new = sx[k] / sw[k];
            double var_new = c.var;
            if (sw[k] > 0.0)
                var_new = std::max(
                    sxx[k] / sw[k] - 2.0 * mean_new * sx[k] / sw[k] +
                        mean_new * mean_new,
                    kVarianceFloor);
            change = std::max({change, std::abs(w_new - c.weight),
                               std::abs(mean_new - c.mean),
                               std::abs(var_new - c.var)});
            c.weight = w_new;
            c.mean = mean_new;
            c.var = var_new;
        }
        seed.normalize();
        if (change < 1e-10) break;
    }
    return seed;
}

// Degenerate order-(L+1) candidate with the same mixture density as the fit:
// duplicating a component leaves the likelihood untouched, so it acts as the
// monotonicity fallback when the split-seeded refit lands somewhere worse.
GmPrior duplicate_largest(const GmPrior& fit) {
    GmPrior out = fit;
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.order(); ++k)
        if (out.components[k].weight > out.components[best].weight) best = k;
    out.components[best].weight *= 0.5;
    out.components.push_back(out.components[best]);
    out.normalize();
    return out;
}

} // namespace

MosMetric mos_metric(const PosteriorStats& stats_prev, const GmPrior& candidate,
                     EmMode mode) {
    candidate.validate();
    const double u =
        std::accumulate(stats_prev.pi.begin(), stats_prev.pi.end(), 0.0);
    if (u < 2.0)
        throw InsufficientSupport("mos_metric: effective sample size below 2");

    const std::size_t L_prev = stats_prev.order;
    double ll = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : ll)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(stats_prev.n);
         ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        if (stats_prev.pi[i] <= 0.0) continue;
        double inner = 0.0;
        for (std::size_t l = 0; l < L_prev; ++l) {
            const double bb = stats_prev.beta_bar[i * L_prev + l];
            if (bb <= 0.0) continue;
            inner +=
                bb * log_mixture_pdf(candidate, stats_prev.gamma[i * L_prev + l]);
        }
        ll += stats_prev.pi[i] * inner;
    }

    MosMetric m;
    m.order = static_cast<int>(candidate.order());
    m.log_likelihood = ll;
    m.sample_size = u;
    m.penalty = parameter_count(m.order, mode) * std::log(u);
    m.score = ll - m.penalty;
    return m;
}

MosResult mos_select(std::span<const double> y, const LinearOperator& op,
                     const EmConfig& cfg, const GampConfig& gamp_cfg,
                     const MosConfig& mos_cfg) {
    MosResult out;
    int order_cur = mos_cfg.initial_order > 0
                        ? mos_cfg.initial_order
                        : (cfg.mode == EmMode::sparse ? 3 : 4);

    EmConfig cur_cfg = cfg;
    cur_cfg.mixture_order = order_cur;
    EmResult fit_cur = em_gm_amp(y, op, cur_cfg, gamp_cfg);

    for (int j = 1; j <= mos_cfg.j_max; ++j) {
        MosSweep sweep;
        sweep.iteration = j;

        // Candidates chain upward on a fixed stats sample: each order seeds
        // the next by a split, and each is refit by weighted EM directly to
        // the point masses the metric scores.
        const StatsSample sample = collect_sample(fit_cur.stats);
        std::vector<GmPrior> cands;
        for (int L = 1; L <= mos_cfg.order_max; ++L) {
            GmPrior fitted;
            if (L == 1) {
                // Moment seed: one component at the sample mean/variance.
                double wsum = 0.0, mean = 0.0, second = 0.0;
                for (std::size_t i = 0; i < sample.x.size(); ++i) {
                    wsum += sample.w[i];
                    mean += sample.w[i] * sample.x[i];
                    second += sample.w[i] * sample.x[i] * sample.x[i];
                }
                mean = wsum > 0.0 ? mean / wsum : 0.0;
                if (cfg.mode == EmMode::heavy_tailed) mean = 0.0;
                GmPrior seed;
                seed.lambda = fit_cur.prior.lambda;
                seed.components = {
                    {1.0, mean,
                     std::max(wsum > 0.0 ? second / wsum - mean * mean : 1.0,
                              kVarianceFloor)}};
                fitted = fit_gm_to_sample(sample, seed, cfg.mode);
            } else {
                GmPrior seed = split_largest(cands.back(), cfg.mode);
                fitted = fit_gm_to_sample(sample, seed, cfg.mode);
                // Never let the penalty-free likelihood decrease in L: a
                // duplicated component reproduces the previous density.
                const GmPrior dup = duplicate_largest(cands.back());
                if (sample_log_likelihood(sample, fitted) <
                    sample_log_likelihood(sample, dup))
                    fitted = dup;
            }
            cands.push_back(fitted);
            sweep.candidates.push_back(
                mos_metric(fit_cur.stats, fitted, cfg.mode));
            if (sweep.candidates.size() >= 2 &&
                sweep.candidates.back().score <
                    sweep.candidates[sweep.candidates.size() - 2].score)
                break;
        }

        std::size_t best = 0;
        for (std::size_t i = 1; i < sweep.candidates.size(); ++i)
            if (sweep.candidates[i].score > sweep.candidates[best].score)
                best = i; // ties resolve toward smaller L
        sweep.selected_order = sweep.candidates[best].order;

        // Full refit at the selected order, seeded with the winning mixture.
        GmPrior init_prior = cands[best];
        init_prior.lambda = fit_cur.prior.lambda;
        EmConfig rc = cfg;
        rc.mixture_order = sweep.selected_order;
        fit_cur = em_gm_amp_with_init(y, op, rc, gamp_cfg, init_prior,
                                      fit_cur.noise);
        sweep.selected_x_hat = fit_cur.x_hat;
        out.trace.push_back(sweep);

        const int order_next = sweep.selected_order;
        if (order_next == order_cur) {
            order_cur = order_next;
            break;
        }
        order_cur = order_next;
    }

    out.order = order_cur;
    out.fit = std::move(fit_cur);
    return out;
}

} // namespace emgamp
