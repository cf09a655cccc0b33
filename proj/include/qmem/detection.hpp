#pragma once

#include <cstdint>
#include <utility>

#include "qmem/rng.hpp"
#include "qmem/types.hpp"

namespace qmem {

/// One detection channel: efficiency, Poisson background, a fixed 50-50
/// beamsplitter onto two APDs, and optional dead-time censoring.
struct ChannelModel {
    double efficiency = 1.0;   // alpha in [0,1]
    double background = 0.0;   // mean Poisson counts per pulse
    double dead_time = 0.0;    // us; 0 disables censoring
    bool afterpulsing = false; // acknowledged but unmodeled; must stay false

    static constexpr double split_ratio = 0.5;
};

/// Pushes n_true photons through a channel: binomial survival, Poisson
/// background, then a Binomial(total, 1/2) split onto the two detectors.
/// With dead_time > 0 the arrival times are drawn from the normalized pulse
/// profile and counts landing within dead_time of the previous accepted count
/// on the same detector are censored; `pulse` is only consulted in that case.
std::pair<std::uint32_t, std::uint32_t> detect(std::uint32_t n_true,
                                               const ChannelModel& channel,
                                               const PulseProfile& pulse,
                                               TrialRng& rng);

/// Convenience overload for the dead_time == 0 path.
std::pair<std::uint32_t, std::uint32_t> detect(std::uint32_t n_true,
                                               const ChannelModel& channel,
                                               TrialRng& rng);

/// Fock-purity criterion zeta = n_bg*(1-alpha) / (n_s*alpha); must be << 1
/// for high-quality conditional Fock-state preparation.
double zeta(double n_bg, double alpha, double n_s);

}  // namespace qmem
