#include "qkdpost/linkbudget.hpp"

#include <cmath>

namespace qkdpost {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void BeamParams::validate() const {
    if (!(wavelength_m > 0.0)) throw std::invalid_argument("BeamParams: wavelength must be > 0");
    if (!(waist_radius_m > 0.0)) throw std::invalid_argument("BeamParams: waist must be > 0");
    if (m_squared < 1.0) throw std::invalid_argument("BeamParams: M^2 must be >= 1");
}

void LinkGeometry::validate() const {
    if (!(range_m > 0.0)) throw std::invalid_argument("LinkGeometry: range must be > 0");
    if (!(receiver_radius_m > 0.0))
        throw std::invalid_argument("LinkGeometry: receiver radius must be > 0");
    if (extra_loss_db < 0.0) throw std::invalid_argument("LinkGeometry: extra loss must be >= 0");
}

double beam_radius_at(const BeamParams& beam, double range_m) {
    const double w0 = beam.waist_radius_m;
    const double x = beam.m_squared * beam.wavelength_m * range_m / (kPi * w0 * w0);
    return w0 * std::sqrt(1.0 + x * x);
}

double collection_loss_db(double spot_radius_m, double receiver_radius_m) {
    const double ratio = receiver_radius_m / spot_radius_m;
    const double collected = -std::expm1(-2.0 * ratio * ratio);
    return -10.0 * std::log10(collected);
}

double total_loss_db(const BeamParams& beam, const LinkGeometry& geometry) {
    const double w = beam_radius_at(beam, geometry.range_m);
    return collection_loss_db(w, geometry.receiver_radius_m) + geometry.extra_loss_db;
}

}  // namespace qkdpost
