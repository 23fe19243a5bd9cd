#pragma once

#include <cstdint>
#include <utility>

#include "qkdpost/core.hpp"

namespace qkdpost {

/// Monte Carlo channel model for one acquisition run.
///
/// Pair emissions are a homogeneous Poisson process; each photon survives its
/// arm independently; detections get Gaussian timing jitter; Bob's clock is
/// scaled by (1 + clock_drift_ppm * 1e-6) and shifted by clock_offset_ps;
/// uncorrelated Poisson background is merged into every detector channel.
/// Detector dead time and afterpulsing are not modeled.
struct SimConfig {
    double pair_rate_cps = 54675.0;         // generated pairs per second at the source
    double arm_transmittance_a = 0.95;
    double arm_transmittance_b = 0.95;
    double intrinsic_qber = 0.0478;
    double background_rate_per_channel_cps = 500.0;
    double timing_jitter_sigma_ps = 200.0;
    std::int64_t clock_offset_ps = 0;       // Bob minus Alice
    double clock_drift_ppm = 0.0;
    double duration_s = 10.0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Which bases correlate for the shared state. The default is the
/// |Phi-> target: Z outcomes correlate (HH/VV), X outcomes anti-correlate.
struct CorrelationModel {
    bool basis_z_correlated = true;
    bool basis_x_correlated = false;
};

/// Generates one correlated Alice/Bob stream pair. Bit-identical for a
/// fixed seed. Generation is single-threaded; run distinct seeds in
/// parallel for independent realizations.
std::pair<TimeTagStream, TimeTagStream> generate_pair_streams(const SimConfig& config,
                                                              const CorrelationModel& model = {});

/// Fraction of true pairs whose arrival-time difference lands inside
/// +/- window for the configured per-detector jitter (erf of the
/// difference distribution). Used by tests to predict observed rates.
double pair_capture_fraction(double window_ps, double jitter_sigma_ps);

}  // namespace qkdpost
