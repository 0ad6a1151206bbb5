#include "emgamp/em.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace emgamp {

namespace {

double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// The ratio maximized by rho_se at a given M/N.
double rho_objective(double c, double delta) {
    const double t = (1.0 + c * c) * std_normal_cdf(-c) - c * std_normal_pdf(c);
    return (1.0 - (2.0 / delta) * t) / (1.0 + c * c - 2.0 * t);
}

// Fitted weights/variances for the uniform density on [-0.5,0.5] with means
// pinned at (2k-L-1)/(2L); variances carry an exact second-moment correction
// so the mixture variance equals 1/12.
constexpr std::array<std::array<double, 8>, 8> kUniformWeights = {{
    {1.0},
    {0.5, 0.5},
    {0.29946926074565439, 0.40106147850868201, 0.29946926074565439},
    {0.23120080045762012, 0.26879919954237624, 0.26879919954237624,
     0.23120080045762012},
    {0.17626745612237116, 0.24161203094414666, 0.16424102586696354,
     0.24161203094414666, 0.17626745612237116},
    {0.15059217718707318, 0.18731924416460072, 0.16208857864832563,
     0.16208857864832563, 0.18731924416460072, 0.15059217718707318},
    {0.1253431882752975, 0.17290657598170078, 0.11181402463259642,
     0.17987242222080416, 0.11181402463259642, 0.17290657598170078,
     0.1253431882752975},
    {0.11185037079006113, 0.14358589131493651, 0.11410181003326078,
     0.13046192786172534, 0.13046192786172534, 0.11410181003326078,
     0.14358589131493651, 0.11185037079006113},
}};

constexpr std::array<std::array<double, 8>, 8> kUniformVariances = {{
    {0.083333333333333329},
    {0.020833333333333332, 0.020833333333333332},
    {0.011873857551942544, 0.024118242601100744, 0.011873857551942544},
    {0.0067564960404458427, 0.012618933845037377, 0.012618933845037377,
     0.0067564960404458427},
    {0.004374749577812009, 0.01007512938551995, 0.0072331988195022635,
     0.01007512938551995, 0.004374749577812009},
    {0.0030710289060044177, 0.0064859544583366893, 0.006241689348152551,
     0.006241689348152551, 0.0064859544583366893, 0.0030710289060044177},
    {0.0022249748523779063, 0.0052607167559864743, 0.0040584400640997333,
     0.0067316437368222211, 0.0040584400640997333, 0.0052607167559864743,
     0.0022249748523779063},
    {0.0017269020129463903, 0.0038076182902601601, 0.0035314350651448603,
     0.0043838095081152363, 0.0043838095081152363, 0.0035314350651448603,
     0.0038076182902601601, 0.0017269020129463903},
}};

} // namespace

double rho_se(double delta) {
    if (!(delta > 0.0) || !(delta <= 1.0))
        throw std::invalid_argument("rho_se: delta outside (0,1]");
    // Coarse scan over the bounded search interval, then ternary refinement.
    double best_c = 1.0, best = -1e300;
    for (int i = 1; i <= 10000; ++i) {
        const double c = i * 1e-3;
        const double v = rho_objective(c, delta);
        if (v > best) {
            best = v;
            best_c = c;
        }
    }
    double lo = std::max(best_c - 1e-3, 1e-9), hi = best_c + 1e-3;
    for (int it = 0; it < 200; ++it) {
        const double c1 = lo + (hi - lo) / 3.0;
        const double c2 = hi - (hi - lo) / 3.0;
        if (rho_objective(c1, delta) < rho_objective(c2, delta))
            lo = c1;
        else
            hi = c2;
    }
    const double rho = rho_objective(0.5 * (lo + hi), delta);
    return std::clamp(rho, 1e-9, 1.0 - 1e-9);
}

std::vector<GmComponent> uniform_gm_fit(int order) {
    if (order < 1 || order > 8)
        throw std::invalid_argument("uniform_gm_fit: order outside [1,8]");
    const int L = order;
    std::vector<GmComponent> comps(L);
    double wsum = 0.0;
    for (int k = 1; k <= L; ++k) {
        comps[k - 1].weight = kUniformWeights[L - 1][k - 1];
        comps[k - 1].mean = (2.0 * k - L - 1) / (2.0 * L);
        comps[k - 1].var = kUniformVariances[L - 1][k - 1];
        wsum += comps[k - 1].weight;
    }
    for (auto& c : comps) c.weight /= wsum;
    return comps;
}

std::pair<GmPrior, NoiseModel> em_init(std::span<const double> y,
                                       const LinearOperator& op,
                                       const EmConfig& cfg) {
    const double energy =
        std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    if (!(energy > 0.0))
        throw std::invalid_argument("em_init: zero-energy measurements");
    const double m = static_cast<double>(op.rows());
    const double n = static_cast<double>(op.cols());
    const double delta = m / n;
    const int L = cfg.order();

    GmPrior prior;
    prior.lambda = delta * rho_se(delta);

    NoiseModel noise;
    noise.psi = std::max(energy / ((cfg.snr0 + 1.0) * m), kVarianceFloor);
    const double signal_var = std::max(
        (energy - m * noise.psi) / (op.frobenius_norm_sq() * prior.lambda),
        kVarianceFloor);

    if (cfg.mode == EmMode::sparse) {
        prior.components = uniform_gm_fit(L);
        const double mean_scale = std::sqrt(12.0 * signal_var);
        for (auto& c : prior.components) {
            c.mean *= mean_scale;
            c.var *= 12.0 * signal_var;
        }
    } else {
        prior.components.resize(L);
        for (int k = 1; k <= L; ++k) {
            prior.components[k - 1].weight = 1.0 / L;
            prior.components[k - 1].mean = 0.0;
            prior.components[k - 1].var =
                (k / std::sqrt(static_cast<double>(L))) * signal_var;
        }
    }
    prior.normalize();
    return {prior, noise};
}

double em_update_psi(std::span<const double> y,
                     std::span<const double> z_hat,
                     std::span<const double> mu_z) {
    if (y.size() != z_hat.size() || y.size() != mu_z.size())
        throw std::invalid_argument("em_update_psi: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - z_hat[i];
        acc += d * d + mu_z[i];
    }
    return std::max(acc / static_cast<double>(y.size()), kVarianceFloor);
}

double em_update_lambda(const PosteriorStats& stats) {
    const double mean =
        std::accumulate(stats.pi.begin(), stats.pi.end(), 0.0) /
        static_cast<double>(stats.n);
    return std::clamp(mean, kLambdaFloor, 1.0 - kLambdaFloor);
}

ComponentUpdate em_update_theta(const PosteriorStats& stats, double theta_prev,
                                std::size_t k) {
    const std::size_t L = stats.order;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < stats.n; ++i) {
        const double w = stats.pi[i] * stats.beta_bar[i * L + k];
        num += w * stats.gamma[i * L + k];
        den += w;
    }
    if (den < 1e-12) return {theta_prev, true};
    return {num / den, false};
}

ComponentUpdate em_update_phi(const PosteriorStats& stats, double theta_prev,
                              double phi_prev, std::size_t k) {
    const std::size_t L = stats.order;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < stats.n; ++i) {
        const double w = stats.pi[i] * stats.beta_bar[i * L + k];
        const double d = theta_prev - stats.gamma[i * L + k];
        num += w * (d * d + stats.nu[i * L + k]);
        den += w;
    }
    if (den < 1e-12) return {phi_prev, true};
    return {std::max(num / den, kVarianceFloor), false};
}

std::vector<double> em_update_omega(const PosteriorStats& stats,
                                    std::vector<double> omega_prev) {
    const std::size_t L = stats.order;
    const double pi_sum =
        std::accumulate(stats.pi.begin(), stats.pi.end(), 0.0);
    if (pi_sum < 1e-12) return omega_prev;
    std::vector<double> omega(L, 0.0);
    for (std::size_t i = 0; i < stats.n; ++i)
        for (std::size_t l = 0; l < L; ++l)
            omega[l] += stats.pi[i] * stats.beta_bar[i * L + l];
    for (double& w : omega) w /= pi_sum;
    return omega;
}

namespace {

EmResult finalize(const GampResult& gamp, GmPrior prior, NoiseModel noise,
                  std::vector<EmTraceEntry> trace, bool converged,
                  int iterations) {
    EmResult out;
    out.x_hat = gamp.state.x_hat;
    out.mu_x = gamp.state.mu_x;
    out.pi = gamp.stats.pi;
    out.prior = std::move(prior);
    out.noise = noise;
    out.stats = gamp.stats;
    out.converged = converged;
    out.iterations = iterations;
    out.trace = std::move(trace);
    return out;
}

} // namespace

EmResult em_gm_amp(std::span<const double> y, const LinearOperator& op,
                   const EmConfig& cfg, const GampConfig& gamp_cfg) {
    auto [prior, noise] = em_init(y, op, cfg);
    return em_gm_amp_with_init(y, op, cfg, gamp_cfg, std::move(prior), noise);
}

EmResult em_gm_amp_with_init(std::span<const double> y,
                             const LinearOperator& op, const EmConfig& cfg,
                             const GampConfig& gamp_cfg, GmPrior prior,
                             NoiseModel noise) {
    prior.validate();
    const std::size_t n = op.cols();

    std::vector<double> x_prev(n, 0.0);
    std::vector<EmTraceEntry> trace;
    GampResult gamp;
    bool have_state = false;
    bool converged = false;
    int iterations = 0;

    for (int i = 1; i <= cfg.i_max; ++i) {
        gamp = gamp_run(op, y, prior, noise, gamp_cfg,
                        (cfg.warm_start && have_state) ? &gamp.state : nullptr);
        have_state = true;
        iterations = i;

        double diff = 0.0, ref = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = gamp.state.x_hat[j] - x_prev[j];
            diff += d * d;
            ref += x_prev[j] * x_prev[j];
        }
        x_prev = gamp.state.x_hat;
        trace.push_back({i, prior, noise.psi, gamp.iterations,
                         ref > 0.0 ? diff / ref : diff});
        if (i > 1 && diff < cfg.tol * ref) {
            converged = true;
            break;
        }

        const PosteriorStats& stats = gamp.stats;
        prior.lambda = em_update_lambda(stats);
        const std::size_t L = prior.order();
        for (std::size_t k = 0; k < L; ++k) {
            auto& c = prior.components[k];
            const double theta_old = c.mean;
            if (cfg.mode == EmMode::sparse)
                c.mean = em_update_theta(stats, theta_old, k).value;
            else
                c.mean = 0.0;
            // phi update uses the pre-update mean, per the incremental schedule
            c.var = em_update_phi(stats, theta_old, c.var, k).value;
        }
        std::vector<double> omega_prev(L);
        for (std::size_t k = 0; k < L; ++k) omega_prev[k] = prior.components[k].weight;
        std::vector<double> omega = em_update_omega(stats, std::move(omega_prev));
        for (std::size_t k = 0; k < L; ++k) prior.components[k].weight = omega[k];
        noise.psi = em_update_psi(y, gamp.state.z_hat, gamp.state.mu_z);
        prior.normalize();
    }
    return finalize(gamp, std::move(prior), noise, std::move(trace), converged,
                    iterations);
}

EmResult genie_gm_amp(std::span<const double> y, const LinearOperator& op,
                      const GmPrior& prior, const NoiseModel& noise,
                      const GampConfig& gamp_cfg) {
    GampResult gamp = gamp_run(op, y, prior, noise, gamp_cfg);
    return finalize(gamp, prior, noise, {}, gamp.converged, gamp.iterations);
}

} // namespace emgamp
