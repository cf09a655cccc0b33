#pragma once

#include "qmem/config.hpp"
#include "qmem/types.hpp"

namespace qmem {

/// Deterministic observables of the write stage.
struct WriteResult {
    double per_mode_mean = 0.0;   // n(t_W) of each transverse mode
    PulseProfile stokes_flux;     // total flux over the write window
    SpinWaveProfile spin_profile; // spatial excitation density at t = t_W
};

/// Mean occupation n(t) = exp(xi*t) - 1 of one mode; the exact solution of
/// dn/dt = xi*(1+n), n(0)=0 (spontaneous term plus stimulated growth).
/// Throws when xi*t > 30 (unphysical regime for this model).
double mode_mean(double xi, double t);

/// Total Stokes flux N*xi*exp(xi*t) over the write window, bin-averaged so
/// that total() equals N*(exp(xi*t_W)-1) exactly.
PulseProfile stokes_flux(const ValidatedConfig& cfg, int samples = 256);

/// Spin-wave density vs z at the end of the write window.
///
/// Shape comes from the vacuum-seeded linear coupled-mode write equations
/// d_z a = sqrt(g) b, d_t b = sqrt(g) a on the unit square (g = xi*t_W),
/// whose second moments give density(z) proportional to
/// integral_0^1 I0(2*sqrt(g*z*u))^2 du, solved here on a grid rather than
/// through the Bessel closed form. The magnitude is normalized so that
/// total = mode_count * mode_mean (one flipped spin per Stokes photon).
/// Density is monotonically nondecreasing in z. Requires z_points >= 64.
SpinWaveProfile spin_profile(const ValidatedConfig& cfg, int z_points = 256);

/// Convenience bundle of the three write-stage results.
WriteResult write_stage(const ValidatedConfig& cfg, int flux_samples = 256,
                        int z_points = 256);

}  // namespace qmem
