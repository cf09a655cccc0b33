#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qmem/types.hpp"

namespace qmem {

/// All physical and detection parameters of one protocol run.
/// Defaults are the paper-like calibrated operating point.
struct ExperimentConfig {
    double optical_depth = 20.0;        // eta, dimensionless, > 0
    double single_atom_rate = 0.010221; // |Omega_W|^2 gamma / Delta_W^2, 1/us
    double write_duration = 1.6;        // t_W, us
    int mode_count = 4;                 // effective transverse modes N >= 1
    double decoherence_rate = 1.0 / 3.0;// gamma_c, 1/us
    double delay = 0.0;                 // tau_d, us
    double retrieve_coupling = 0.192784;// |Omega_R|^2 scale, multiple of the
                                        // reference group velocity (1 cell/us)
    double cell_length = 1.0;           // normalized; must be 1
    double stokes_efficiency = 0.50;    // alpha_S in [0,1]
    double antistokes_efficiency = 0.40;// alpha_AS in [0,1]
    double stokes_background = 0.2862;  // mean Poisson counts per pulse
    double antistokes_background = 0.1742;
    double dead_time = 0.0;             // detector dead time, us; 0 disables
    std::uint64_t rng_seed = 0x5eed0001u;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Config whose invariants have been checked, plus derived quantities.
class ValidatedConfig {
public:
    const ExperimentConfig& raw() const { return cfg_; }

    double optical_depth() const { return cfg_.optical_depth; }
    double single_atom_rate() const { return cfg_.single_atom_rate; }
    double write_duration() const { return cfg_.write_duration; }
    int mode_count() const { return cfg_.mode_count; }
    double decoherence_rate() const { return cfg_.decoherence_rate; }
    double delay() const { return cfg_.delay; }
    double retrieve_coupling() const { return cfg_.retrieve_coupling; }
    double stokes_efficiency() const { return cfg_.stokes_efficiency; }
    double antistokes_efficiency() const { return cfg_.antistokes_efficiency; }
    double stokes_background() const { return cfg_.stokes_background; }
    double antistokes_background() const { return cfg_.antistokes_background; }
    double dead_time() const { return cfg_.dead_time; }
    std::uint64_t rng_seed() const { return cfg_.rng_seed; }

    /// Collective Raman scattering rate xi = eta * single_atom_rate, 1/us.
    double collective_rate() const { return xi_; }
    /// Group velocity at retrieve_coupling = 1, cell lengths per us.
    double reference_group_velocity() const { return 1.0; }
    /// Storage survival probability exp(-gamma_c * tau_d).
    double storage_survival() const { return storage_survival_; }

private:
    friend ValidatedConfig validate(const ExperimentConfig&);
    ExperimentConfig cfg_;
    double xi_ = 0.0;
    double storage_survival_ = 1.0;
};

/// Checks every bound, reporting all violations at once; precomputes xi etc.
/// Throws ValidationError listing each offending field (NaN/inf included).
ValidatedConfig validate(const ExperimentConfig& cfg);

/// Flat-JSON config file I/O. Keys match ExperimentConfig field names exactly;
/// missing keys take defaults, unknown keys are a hard error.
ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace qmem
