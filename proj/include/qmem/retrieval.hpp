#pragma once

#include <utility>
#include <vector>

#include "qmem/config.hpp"
#include "qmem/types.hpp"

namespace qmem {

/// Retrieval of a stored spin wave into an anti-Stokes pulse.
struct RetrievalResult {
    PulseProfile antistokes_flux;
    double efficiency = 0.0;      // retrieved / stored
    double fwhm = 0.0;            // us, interpolated at half max
    double retrieval_time = 0.0;  // tau_r: time to 90% of the retrievable photons
    double absorbed = 0.0;        // lost to polarization decay + spin decay
    double remaining = 0.0;       // excitation still in the medium at t_end
};

/// Piecewise-constant coupling schedule: value i applies from time[i] until
/// time[i+1] (the last value holds to the end). Values are |Omega_R|^2
/// multipliers of the reference group velocity (1 cell length / us).
struct CouplingSchedule {
    std::vector<double> time;   // us, strictly increasing, time[0] == 0
    std::vector<double> value;  // > 0, same length

    static CouplingSchedule constant(double k) { return {{0.0}, {k}}; }
    double group_velocity_at(double t) const;
};

/// Uniform number decay of the stored wave over the delay: density scaled by
/// exp(-gamma_c * tau_d).
SpinWaveProfile apply_storage_decay(const SpinWaveProfile& profile,
                                    double gamma_c, double tau_d);

/// Ideal-limit retrieval (perfect EIT, infinite optical depth): the output
/// pulse is the spin density read out back-to-front at the group velocity,
/// flux(t) = v_g(t) * density(1 - integral v_g), with unit efficiency.
RetrievalResult retrieve_ideal(const SpinWaveProfile& profile,
                               const CouplingSchedule& coupling,
                               int out_samples = 512);
RetrievalResult retrieve_ideal(const SpinWaveProfile& profile, double coupling,
                               int out_samples = 512);

enum class SolverMethod {
    kAuto,             // explicit RK up to eta = 400, sweep beyond
    kExplicitRk,       // upwind in z, Strang decay + RK4 in t
    kExponentialSweep, // causal per-cell exact exponential integration
};

struct RetrievalOptions {
    int z_points = 0;          // 0: max(256, profile grid, capped 4*eta)
    double dt = 0.0;           // us; 0 selects the stability-limited value
    double cfl = 0.4;          // stability number, must be <= 0.5
    double adiabaticity = 25.0;// gamma = adiabaticity * v_g_max * eta
    double t_end_factor = 2.5; // horizon in units of one cell transit
    int out_samples = 512;
    SolverMethod method = SolverMethod::kAuto;
};

/// Finite-optical-depth retrieval: integrates the three-field linear EIT
/// equations (anti-Stokes envelope, optical polarization, spin coherence)
///   dE/dz = -a P,   dP/dt = -gamma P + a E + Omega(t) S,
///   dS/dt = -gamma_c S - Omega(t) P,        a^2 = gamma * eta
/// in the co-moving frame, first-order upwind in z, explicit RK4 in time with
/// the decay factors applied exactly. Output flux is E(z=1,t)^2.
RetrievalResult retrieve_finite_depth(const SpinWaveProfile& profile,
                                      const ValidatedConfig& cfg,
                                      const CouplingSchedule& coupling,
                                      const RetrievalOptions& opts = {});
RetrievalResult retrieve_finite_depth(const SpinWaveProfile& profile,
                                      const ValidatedConfig& cfg,
                                      const RetrievalOptions& opts = {});

/// Full width at half maximum of a sampled pulse, linearly interpolated.
double pulse_fwhm(const PulseProfile& pulse);

/// Time by which the given fraction of the pulse total has exited.
double pulse_quantile_time(const PulseProfile& pulse, double fraction);

}  // namespace qmem
