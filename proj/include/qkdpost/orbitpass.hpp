#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qkdpost/keyrate.hpp"
#include "qkdpost/linkbudget.hpp"

namespace qkdpost {

/// The pass never reaches the elevation gate.
struct NoVisibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Circular-orbit pass over a ground station. The orbit is modeled over a
/// non-rotating Earth: the central angle to the sub-satellite point combines
/// a constant cross-track offset (set by max_elevation_deg) with the in-track
/// angle swept at the orbital rate. Earth rotation over a <= 5 minute pass
/// contributes at the percent level and is absorbed in tolerances.
struct PassConfig {
    double altitude_km = 500.0;
    double max_elevation_deg = 90.0;
    double min_elevation_deg = 20.0;  // link gate
    double time_step_s = 1.0;

    void validate() const;
};

struct PassSample {
    double t_s = 0.0;  // relative to closest approach
    double elevation_deg = 0.0;
    double slant_range_km = 0.0;
    double loss_db = 0.0;
    double sifted_rate_cps = 0.0;
};

struct PassProfile {
    std::vector<PassSample> samples;
    double duration_s = 0.0;         // samples above the gate, times time_step
    double integrated_sifted = 0.0;  // sum of sifted_rate * time_step
    double altitude_km = 0.0;
    double max_elevation_deg = 0.0;
    double time_step_s = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kEarthMuKm3S2 = 398600.4418;

/// Line-of-sight distance to the satellite:
///   d = sqrt((Re+h)^2 - Re^2 cos^2 e) - Re sin e.
double slant_range(double elevation_deg, double altitude_km);

/// Time-symmetric (t, elevation, slant range) samples of one pass while the
/// elevation stays at or above the gate. Throws NoVisibilityError when
/// max_elevation < min_elevation.
PassProfile elevation_profile(const PassConfig& config);

/// Builds a profile from an externally supplied (t, elevation) table — the
/// hook for users with real ephemerides. Samples below the gate are dropped;
/// slant ranges are recomputed from the given altitude; the table must be
/// evenly spaced at time_step_s.
PassProfile profile_from_table(const std::vector<std::pair<double, double>>& t_elevation,
                               double altitude_km, double min_elevation_deg, double time_step_s);

/// Terrestrial-to-LEO extrapolation inputs. baseline_rate_cps is the sifted
/// rate measured on a reference link with ~0 dB geometric loss, so the pass
/// loss is purely the additional diffraction loss plus the flat margin. The
/// QBER is held at the measured terrestrial value over the whole pass; the
/// background-driven QBER growth at high loss is deliberately not modeled,
/// which makes the extrapolation optimistic.
struct ExtrapolationConfig {
    double baseline_rate_cps = 24665.0;
    BeamParams beam;
    double receiver_radius_m = 0.4;
    double extra_loss_db = 6.0;
    double qber = 0.0478;
    SecurityParams security;
};

struct PassExtrapolation {
    PassProfile profile;  // loss_db and sifted_rate_cps filled in
    std::uint64_t integrated_sifted = 0;
    KeyRateResult keyrate;  // sharp bound over the whole-pass block
};

/// Applies the link budget along the pass, integrates the sifted counts, and
/// runs the sharp finite-key bound on the single whole-pass block.
PassExtrapolation extrapolate_pass(const PassProfile& profile, const ExtrapolationConfig& config);

}  // namespace qkdpost
