#include "qkdpost/sim.hpp"

#include <cmath>

namespace qkdpost {

void SimConfig::validate() const {
    if (pair_rate_cps < 0.0) throw std::invalid_argument("SimConfig: pair_rate must be >= 0");
    if (!(arm_transmittance_a > 0.0) || arm_transmittance_a > 1.0 ||
        !(arm_transmittance_b > 0.0) || arm_transmittance_b > 1.0)
        throw std::invalid_argument("SimConfig: transmittances must be in (0,1]");
    if (intrinsic_qber < 0.0 || intrinsic_qber > 0.5)
        throw std::invalid_argument("SimConfig: intrinsic_qber must be in [0,0.5]");
    if (background_rate_per_channel_cps < 0.0)
        throw std::invalid_argument("SimConfig: background rate must be >= 0");
    if (timing_jitter_sigma_ps < 0.0)
        throw std::invalid_argument("SimConfig: jitter sigma must be >= 0");
    if (!(duration_s > 0.0)) throw std::invalid_argument("SimConfig: duration must be positive");
}

namespace {

Channel channel_of(Basis basis, bool outcome) {
    if (basis == Basis::Z) return outcome ? Channel::V : Channel::H;
    return outcome ? Channel::A : Channel::D;
}

std::int64_t bob_clock(double true_time_ps, const SimConfig& cfg) {
    const double scaled = true_time_ps * (1.0 + cfg.clock_drift_ppm * 1e-6);
    return static_cast<std::int64_t>(std::llround(scaled)) + cfg.clock_offset_ps;
}

void append_background(TimeTagStream& stream, const SimConfig& cfg, Rng& rng) {
    if (cfg.background_rate_per_channel_cps <= 0.0) return;
    const double duration_ps = cfg.duration_s * 1e12;
    for (int ch = 0; ch < 4; ++ch) {
        double t = 0.0;
        for (;;) {
            t += rng.exponential(cfg.background_rate_per_channel_cps) * 1e12;
            if (t > duration_ps) break;
            const std::int64_t ts = static_cast<std::int64_t>(std::llround(t));
            if (ts < 0) continue;
            stream.events.push_back({ts, static_cast<Channel>(ch)});
        }
    }
}

}  // namespace

std::pair<TimeTagStream, TimeTagStream> generate_pair_streams(const SimConfig& cfg,
                                                              const CorrelationModel& model) {
    cfg.validate();
    Rng rng(cfg.seed);

    TimeTagStream alice{Party::Alice, "sim", {}};
    TimeTagStream bob{Party::Bob, "sim", {}};
    const double duration_ps = cfg.duration_s * 1e12;
    const double expected_pairs = cfg.pair_rate_cps * cfg.duration_s;
    alice.events.reserve(static_cast<std::size_t>(
        expected_pairs * cfg.arm_transmittance_a +
        4.0 * cfg.background_rate_per_channel_cps * cfg.duration_s + 64.0));
    bob.events.reserve(static_cast<std::size_t>(
        expected_pairs * cfg.arm_transmittance_b +
        4.0 * cfg.background_rate_per_channel_cps * cfg.duration_s + 64.0));

    if (cfg.pair_rate_cps > 0.0) {
        double t = 0.0;
        for (;;) {
            t += rng.exponential(cfg.pair_rate_cps) * 1e12;
            if (t > duration_ps) break;

            const bool detect_a = rng.bernoulli(cfg.arm_transmittance_a);
            const bool detect_b = rng.bernoulli(cfg.arm_transmittance_b);
            const Basis basis_a = rng.bernoulli(0.5) ? Basis::X : Basis::Z;
            const Basis basis_b = rng.bernoulli(0.5) ? Basis::X : Basis::Z;
            const bool outcome_a = rng.bernoulli(0.5);

            bool outcome_b;
            if (basis_a == basis_b) {
                const bool correlated = basis_a == Basis::Z ? model.basis_z_correlated
                                                            : model.basis_x_correlated;
                outcome_b = correlated ? outcome_a : !outcome_a;
                if (cfg.intrinsic_qber > 0.0 && rng.bernoulli(cfg.intrinsic_qber))
                    outcome_b = !outcome_b;
            } else {
                outcome_b = rng.bernoulli(0.5);
            }

            if (detect_a) {
                const double ta = cfg.timing_jitter_sigma_ps > 0.0
                                      ? rng.gaussian(t, cfg.timing_jitter_sigma_ps)
                                      : t;
                const std::int64_t ts = static_cast<std::int64_t>(std::llround(ta));
                if (ts >= 0) alice.events.push_back({ts, channel_of(basis_a, outcome_a)});
            }
            if (detect_b) {
                const double tb = cfg.timing_jitter_sigma_ps > 0.0
                                      ? rng.gaussian(t, cfg.timing_jitter_sigma_ps)
                                      : t;
                const std::int64_t ts = bob_clock(tb, cfg);
                if (ts >= 0) bob.events.push_back({ts, channel_of(basis_b, outcome_b)});
            }
        }
    }

    append_background(alice, cfg, rng);
    append_background(bob, cfg, rng);

    alice.normalize();
    bob.normalize();
    return {std::move(alice), std::move(bob)};
}

double pair_capture_fraction(double window_ps, double jitter_sigma_ps) {
    if (jitter_sigma_ps <= 0.0) return 1.0;
    // difference of two independent detections has sigma * sqrt(2)
    const double sigma_delta = jitter_sigma_ps * std::sqrt(2.0);
    return std::erf(window_ps / (sigma_delta * std::sqrt(2.0)));
}

}  // namespace qkdpost
