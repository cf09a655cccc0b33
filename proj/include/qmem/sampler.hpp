#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qmem/config.hpp"
#include "qmem/detection.hpp"
#include "qmem/retrieval.hpp"
#include "qmem/rng.hpp"
#include "qmem/types.hpp"

namespace qmem {

/// Everything one trial needs, with the deterministic physics (write means,
/// storage survival, retrieval efficiency, pulse shapes) precomputed.
struct TrialModel {
    int mode_count = 1;
    double mean_per_mode = 0.0;        // thermal mean occupation per mode
    double storage_survival = 1.0;     // exp(-gamma_c * tau_d)
    double retrieval_efficiency = 1.0; // scalar from the EIT solver
    ChannelModel stokes;
    ChannelModel antistokes;
    PulseProfile stokes_pulse;         // used only when dead times are set
    PulseProfile antistokes_pulse;
};

/// Builds the model from a validated config, running the write stage and the
/// finite-depth retrieval solver. Pass a precomputed retrieval efficiency to
/// skip the solver (calibration loops, delay sweeps).
TrialModel build_trial_model(const ValidatedConfig& cfg);
TrialModel build_trial_model(const ValidatedConfig& cfg,
                             double retrieval_efficiency);

struct TrialBatch {
    std::vector<CountRecord> records;
    std::optional<ExperimentConfig> config;  // snapshot when built from one
    std::uint64_t base_seed = 0;
};

/// One complete protocol trial: thermal pair generation per mode, binomial
/// storage and retrieval thinning, then the detection chain on both sides.
CountRecord sample_trial(const TrialModel& model, TrialRng& rng);

/// Runs `trials` independent trials on `workers` threads (0 = hardware).
/// Per-trial counter-based rng streams make the result bit-identical for any
/// worker count.
TrialBatch run_batch(const TrialModel& model, std::uint64_t trials,
                     int workers, std::uint64_t base_seed);
TrialBatch run_batch(const ValidatedConfig& cfg, std::uint64_t trials,
                     int workers);

/// counts.csv I/O (columns: trial,s1,s2,as1,as2[,true_stokes,true_spin,retrieved]).
std::string batch_to_csv(const TrialBatch& batch, bool latent);
std::vector<CountRecord> records_from_csv(const std::string& csv_text);

}  // namespace qmem
