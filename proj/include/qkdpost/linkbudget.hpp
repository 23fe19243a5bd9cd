#pragma once

#include <stdexcept>

namespace qkdpost {

/// Transmitted Gaussian beam. The waist is placed at the transmitter with
/// radius equal to the aperture radius; truncation and obscuration effects
/// are folded into the beam quality factor.
struct BeamParams {
    double wavelength_m = 780e-9;
    double waist_radius_m = 0.04;  // 1/e^2 radius at the transmitter
    double m_squared = 1.6;

    void validate() const;
};

/// Receiver side of one free-space hop. extra_loss_db is a flat margin for
/// pointing error and atmospheric extinction; no airmass scaling is applied.
struct LinkGeometry {
    double range_m = 500e3;
    double receiver_radius_m = 0.4;
    double extra_loss_db = 0.0;

    void validate() const;
};

/// 1/e^2 beam radius after propagating range_m:
///   w(z) = w0 * sqrt(1 + (M^2 * lambda * z / (pi * w0^2))^2).
double beam_radius_at(const BeamParams& beam, double range_m);

/// Aperture collection loss of a centered Gaussian spot,
///   -10*log10(1 - exp(-2 r^2 / w^2)).
double collection_loss_db(double spot_radius_m, double receiver_radius_m);

/// Diffraction collection loss at range plus the flat margin.
double total_loss_db(const BeamParams& beam, const LinkGeometry& geometry);

}  // namespace qkdpost
