#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qkdpost/core.hpp"

namespace qkdpost {

enum class KeyRateRegime { Asymptotic, SharpFinite };

/// Extractable secret key length for one block. secret_bits is clamped to
/// zero; in the finite regime it never exceeds the asymptotic value for the
/// same block.
struct KeyRateResult {
    double secret_bits = 0.0;
    double rate_bps = 0.0;
    KeyRateRegime regime = KeyRateRegime::Asymptotic;
    std::optional<double> q_threshold;  // finite regime only
    std::optional<double> kappa;        // finite regime only
};

/// Asymptotic secret key length
///   S = max{0, n_key * [1 - f_ec*h(p) - h(p)]}.
/// The basis-reconciliation factor is one because the block counts are
/// already sifted pairs.
KeyRateResult asymptotic_key_length(const SiftedBlock& block, const SecurityParams& params);

/// Statistical fluctuation scale kappa = (2 / 9n) * ln(1 / eps_pe).
/// Requires n >= 1 and eps_pe in (0, 1).
double kappa(std::uint64_t n, double epsilon_pe);

/// Upper confidence map
///   gamma+(x) = [3k + (1-2k)x + 3*sqrt(k(k + x - x^2))] / (1 + 4k),
/// valid for kappa <= 1/4; the caller applies the q_th = 1 fallback beyond.
double gamma_plus(double x, double kappa);

/// Piecewise confidence interval: gamma+(x) for x in [0, (1-2k)/(1+k)],
/// otherwise 1 + epsilon.
double gamma_interval(double x, double kappa, double epsilon);

/// Phase error threshold for the key bits,
///   q_th = clamp01[(N*Gamma+(p) - n*p) / (N - n)],
/// forced to 1 when kappa > 1/4 (sample too small for the bound).
double sharp_threshold(const SiftedBlock& block, const SecurityParams& params);

/// Finite-size penalty of the leftover-hash and correctness steps:
///   Delta = 2*log2(1/(2*eps_sec)) + log2(2/eps_cor)   (~157 bits at the
/// default budget, negligible against megabit blocks).
double finite_size_penalty(const SecurityParams& params);

/// Sharp finite-key secret length
///   S = max{0, n_key*[1 - h(q_th)] - f_ec*n_key*h(p) - Delta}.
/// A threshold q_th >= 1/2 makes the entropic bound vacuous, so the key
/// length is zero there (h alone would be symmetric about 1/2 and would
/// otherwise resurrect a positive value).
KeyRateResult sharp_key_length(const SiftedBlock& block, const SecurityParams& params);

/// Sharp rate over synthetic blocks of each size in n_grid (ascending) at a
/// fixed QBER; rate = S / (N / rate_cps).
std::vector<std::pair<std::uint64_t, double>> finite_key_curve(double rate_cps, double qber,
                                                               const SecurityParams& params,
                                                               const std::vector<std::uint64_t>& n_grid);

/// Synthetic block of N sifted pairs at a fixed observed QBER, split with the
/// given sampling fraction. Used by the curve and the pass extrapolation.
SiftedBlock synthetic_block(std::uint64_t n_total, double qber, double duration_s,
                            const SecurityParams& params);

}  // namespace qkdpost
