#include "qkdpost/orbitpass.hpp"

#include <algorithm>
#include <cmath>

namespace qkdpost {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

/// Earth central angle between station and sub-satellite point at elevation e.
double central_angle(double elevation_deg, double orbit_radius_km) {
    const double e = deg2rad(elevation_deg);
    const double nadir = std::asin(kEarthRadiusKm * std::cos(e) / orbit_radius_km);
    return kPi / 2.0 - e - nadir;
}

/// Elevation seen from the station at central angle lambda.
double elevation_at(double lambda, double orbit_radius_km) {
    if (lambda <= 0.0) return 90.0;
    const double c = std::cos(lambda);
    const double s = std::sin(lambda);
    return rad2deg(std::atan((c - kEarthRadiusKm / orbit_radius_km) / s));
}

}  // namespace

void PassConfig::validate() const {
    if (!(altitude_km > 0.0)) throw std::invalid_argument("PassConfig: altitude must be > 0");
    if (!(max_elevation_deg <= 90.0))
        throw std::invalid_argument("PassConfig: max elevation above 90 deg");
    if (!(min_elevation_deg < max_elevation_deg))
        throw NoVisibilityError("PassConfig: pass peaks below the elevation gate");
    if (!(time_step_s > 0.0)) throw std::invalid_argument("PassConfig: time step must be > 0");
}

double slant_range(double elevation_deg, double altitude_km) {
    if (elevation_deg < 0.0 || elevation_deg > 90.0)
        throw std::invalid_argument("slant_range: elevation outside [0,90]");
    const double e = deg2rad(elevation_deg);
    const double r = kEarthRadiusKm + altitude_km;
    const double re_cos = kEarthRadiusKm * std::cos(e);
    return std::sqrt(r * r - re_cos * re_cos) - kEarthRadiusKm * std::sin(e);
}

PassProfile elevation_profile(const PassConfig& config) {
    config.validate();

    const double r = kEarthRadiusKm + config.altitude_km;
    const double omega = std::sqrt(kEarthMuKm3S2 / (r * r * r));  // rad/s
    const double lam_min = central_angle(config.max_elevation_deg, r);
    const double lam_gate = central_angle(config.min_elevation_deg, r);

    // gate crossing: cos(lam_gate) = cos(lam_min) * cos(omega * t)
    const double ratio = std::cos(lam_gate) / std::cos(lam_min);
    const double t_max = std::acos(std::clamp(ratio, -1.0, 1.0)) / omega;

    PassProfile profile;
    profile.altitude_km = config.altitude_km;
    profile.max_elevation_deg = config.max_elevation_deg;
    profile.time_step_s = config.time_step_s;

    const std::int64_t k_max =
        static_cast<std::int64_t>(std::floor(t_max / config.time_step_s));
    profile.samples.reserve(static_cast<std::size_t>(2 * k_max + 1));
    for (std::int64_t k = -k_max; k <= k_max; ++k) {
        const double t = static_cast<double>(k) * config.time_step_s;
        const double lam = std::acos(std::cos(lam_min) * std::cos(omega * t));
        PassSample s;
        s.t_s = t;
        s.elevation_deg = elevation_at(lam, r);
        s.slant_range_km = slant_range(s.elevation_deg, config.altitude_km);
        profile.samples.push_back(s);
    }
    profile.duration_s = static_cast<double>(2 * k_max + 1) * config.time_step_s;
    return profile;
}

PassProfile profile_from_table(const std::vector<std::pair<double, double>>& t_elevation,
                               double altitude_km, double min_elevation_deg, double time_step_s) {
    if (!(altitude_km > 0.0)) throw std::invalid_argument("profile_from_table: bad altitude");
    if (!(time_step_s > 0.0)) throw std::invalid_argument("profile_from_table: bad time step");

    PassProfile profile;
    profile.altitude_km = altitude_km;
    profile.time_step_s = time_step_s;
    profile.max_elevation_deg = 0.0;
    for (const auto& [t, elev] : t_elevation) {
        if (elev < min_elevation_deg) continue;
        PassSample s;
        s.t_s = t;
        s.elevation_deg = elev;
        s.slant_range_km = slant_range(elev, altitude_km);
        profile.samples.push_back(s);
        profile.max_elevation_deg = std::max(profile.max_elevation_deg, elev);
    }
    if (profile.samples.empty())
        throw NoVisibilityError("profile_from_table: no samples at or above the gate");
    profile.duration_s = static_cast<double>(profile.samples.size()) * time_step_s;
    return profile;
}

PassExtrapolation extrapolate_pass(const PassProfile& profile, const ExtrapolationConfig& config) {
    config.beam.validate();
    if (config.baseline_rate_cps < 0.0)
        throw std::invalid_argument("extrapolate_pass: negative baseline rate");

    PassExtrapolation out;
    out.profile = profile;

    double integrated = 0.0;
    for (auto& s : out.profile.samples) {
        const double w = beam_radius_at(config.beam, s.slant_range_km * 1e3);
        s.loss_db = collection_loss_db(w, config.receiver_radius_m) + config.extra_loss_db;
        s.sifted_rate_cps = config.baseline_rate_cps * std::pow(10.0, -s.loss_db / 10.0);
        integrated += s.sifted_rate_cps * profile.time_step_s;
    }
    out.profile.integrated_sifted = integrated;
    out.integrated_sifted = static_cast<std::uint64_t>(std::llround(integrated));

    const SiftedBlock block = synthetic_block(out.integrated_sifted, config.qber,
                                              out.profile.duration_s, config.security);
    out.keyrate = block.n_pe >= 1 ? sharp_key_length(block, config.security) : KeyRateResult{};
    if (block.n_pe < 1) out.keyrate.regime = KeyRateRegime::SharpFinite;
    return out;
}

}  // namespace qkdpost
