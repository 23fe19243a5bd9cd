#include "qkdpost/keyrate.hpp"

#include <algorithm>
#include <cmath>

namespace qkdpost {

KeyRateResult asymptotic_key_length(const SiftedBlock& block, const SecurityParams& params) {
    const double h = binary_entropy(block.qber_hat);
    const double n_key = static_cast<double>(block.n_key);
    const double s = std::max(0.0, n_key * (1.0 - params.f_ec * h - h));
    KeyRateResult r;
    r.secret_bits = s;
    r.rate_bps = block.duration_s > 0.0 ? s / block.duration_s : 0.0;
    r.regime = KeyRateRegime::Asymptotic;
    return r;
}

double kappa(std::uint64_t n, double epsilon_pe) {
    if (n < 1) throw std::domain_error("kappa: n must be >= 1");
    if (!(epsilon_pe > 0.0) || !(epsilon_pe < 1.0))
        throw std::domain_error("kappa: epsilon_pe must be in (0,1)");
    return 2.0 / (9.0 * static_cast<double>(n)) * std::log(1.0 / epsilon_pe);
}

double gamma_plus(double x, double kappa) {
    if (!(x >= 0.0) || !(x <= 1.0)) throw std::domain_error("gamma_plus: x outside [0,1]");
    if (!(kappa > 0.0) || kappa > 0.25)
        throw std::domain_error("gamma_plus: kappa outside (0, 1/4]");
    const double root = std::sqrt(kappa * (kappa + x - x * x));
    return (3.0 * kappa + (1.0 - 2.0 * kappa) * x + 3.0 * root) / (1.0 + 4.0 * kappa);
}

double gamma_interval(double x, double kappa, double epsilon) {
    const double boundary = (1.0 - 2.0 * kappa) / (1.0 + kappa);
    if (x >= 0.0 && x <= boundary) return gamma_plus(x, kappa);
    if (!(x >= 0.0) || !(x <= 1.0)) throw std::domain_error("gamma_interval: x outside [0,1]");
    if (!(kappa > 0.0) || kappa > 0.25)
        throw std::domain_error("gamma_interval: kappa outside (0, 1/4]");
    return 1.0 + epsilon;
}

double sharp_threshold(const SiftedBlock& block, const SecurityParams& params) {
    if (block.n_pe < 1) throw std::domain_error("sharp_threshold: block has no sampled pairs");
    const double k = kappa(block.n_pe, params.epsilon_pe);
    if (k > 0.25) return 1.0;  // sample too small for the bound

    const double n_total = static_cast<double>(block.n_total);
    const double n_pe = static_cast<double>(block.n_pe);
    const double gamma = gamma_interval(block.qber_hat, k, params.epsilon_total);
    const double q = (n_total * gamma - n_pe * block.qber_hat) / (n_total - n_pe);
    return std::clamp(q, 0.0, 1.0);
}

double finite_size_penalty(const SecurityParams& params) {
    return 2.0 * std::log2(1.0 / (2.0 * params.epsilon_sec)) +
           std::log2(2.0 / params.epsilon_cor);
}

KeyRateResult sharp_key_length(const SiftedBlock& block, const SecurityParams& params) {
    KeyRateResult r;
    r.regime = KeyRateRegime::SharpFinite;
    if (block.n_pe < 1 || block.n_key < 1) {
        r.q_threshold = 1.0;
        return r;
    }

    const double k = kappa(block.n_pe, params.epsilon_pe);
    const double q_th = sharp_threshold(block, params);
    r.q_threshold = q_th;
    r.kappa = k;

    double s = 0.0;
    if (q_th < 0.5) {
        const double n_key = static_cast<double>(block.n_key);
        s = n_key * (1.0 - binary_entropy(q_th)) -
            params.f_ec * n_key * binary_entropy(block.qber_hat) - finite_size_penalty(params);
        s = std::max(0.0, s);
    }
    r.secret_bits = s;
    r.rate_bps = block.duration_s > 0.0 ? s / block.duration_s : 0.0;
    return r;
}

SiftedBlock synthetic_block(std::uint64_t n_total, double qber, double duration_s,
                            const SecurityParams& params) {
    SiftedBlock b;
    b.t_start_s = 0.0;
    b.duration_s = duration_s;
    b.n_total = n_total;
    b.n_pe = parameter_estimation_count(n_total, params.sample_fraction);
    b.n_key = n_total - b.n_pe;
    b.qber_hat = qber;
    b.n_mismatch = static_cast<std::uint64_t>(
        std::llround(qber * static_cast<double>(b.n_pe)));
    return b;
}

std::vector<std::pair<std::uint64_t, double>> finite_key_curve(
    double rate_cps, double qber, const SecurityParams& params,
    const std::vector<std::uint64_t>& n_grid) {
    if (!(rate_cps > 0.0)) throw std::domain_error("finite_key_curve: rate must be positive");
    std::vector<std::pair<std::uint64_t, double>> curve;
    curve.reserve(n_grid.size());
    for (std::uint64_t n : n_grid) {
        const double duration = static_cast<double>(n) / rate_cps;
        const SiftedBlock b = synthetic_block(n, qber, duration, params);
        const KeyRateResult r = sharp_key_length(b, params);
        curve.emplace_back(n, r.rate_bps);
    }
    return curve;
}

}  // namespace qkdpost
