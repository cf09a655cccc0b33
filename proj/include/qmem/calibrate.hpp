#pragma once

#include "qmem/config.hpp"

namespace qmem {

/// Observable targets for the instrument-parameter root-finder.
struct CalibrationTargets {
    double mean_s = 1.06;   // detected Stokes mean per pulse
    double mean_as = 0.36;  // detected anti-Stokes mean per pulse
    double v_norm = 0.942;  // normalized variance at tau_d = 0
    double zeta = 0.30;     // Fock-purity criterion (detected-mean convention)
};

/// Population observables of the trial model in closed form (no sampling).
struct ForwardObservables {
    double mean_s = 0.0;
    double mean_as = 0.0;
    double v_norm = 0.0;
    double zeta = 0.0;
};
ForwardObservables predict_observables(const ExperimentConfig& cfg,
                                       double retrieval_efficiency);

struct CalibrationOutcome {
    ExperimentConfig config;   // base config with the four knobs replaced
    double retrieval_efficiency = 0.0;
    double residual = 0.0;     // root-sum-square of relative target misses
    int evaluations = 0;
};

/// Solves (single_atom_rate, antistokes_efficiency, stokes_background,
/// antistokes_background) against the four targets by Nelder-Mead on the
/// closed-form observables; the retrieval efficiency is held fixed (it does
/// not depend on any of the four knobs).
CalibrationOutcome calibrate(const ValidatedConfig& base,
                             const CalibrationTargets& targets,
                             double retrieval_efficiency);

/// Bisects retrieve_coupling so the finite-depth retrieval efficiency of the
/// base config's stored wave hits `efficiency_target`.
double calibrate_coupling(const ValidatedConfig& base, double efficiency_target,
                          double lo = 0.02, double hi = 4.0);

}  // namespace qmem
