#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qmem/config.hpp"
#include "qmem/types.hpp"

namespace qmem {

/// Measured photon shot noise var(AS1-AS2) + var(S1-S2), jackknife stderr.
Estimate psn_meas(std::span<const CountRecord> records);

/// Normalized variance V = var((as1+as2)-(s1+s2)) / PSN_meas.
/// One for classically correlated pulses, zero for perfect number correlation.
Estimate normalized_variance(std::span<const CountRecord> records);

/// g2(AS) = <AS1*AS2> / (<AS1><AS2>) over trials with s1+s2 == n_s.
/// Flagged low_statistics when the subsample has fewer than 100 trials.
Estimate conditional_g2(std::span<const CountRecord> records, int n_s);

/// Mean anti-Stokes count over the same subsample.
Estimate conditional_mean(std::span<const CountRecord> records, int n_s);

/// Weighted least-squares slope of conditional_mean over n_s in [0, 4].
Estimate conditional_mean_slope(std::span<const CountRecord> records);

/// Mandel Q = mean * (g2 - 1), jackknifed as a whole.
Estimate mandel_q(std::span<const CountRecord> records, int n_s);

struct CorrectedEstimates {
    double mean = 0.0;
    double q = 0.0;
    double clipped_mass = 0.0;  // negative probability removed and renormalized
};

/// Inverts binomial loss `alpha` and Poisson background `bg` on the
/// conditional anti-Stokes count distribution at s1+s2 == n_s by solving the
/// truncated transition-matrix system on {0..n_max}; negative probabilities
/// are clipped and the distribution renormalized. Errors when the system is
/// ill-conditioned (1-norm condition number above 1e8).
CorrectedEstimates corrected_estimates(std::span<const CountRecord> records,
                                       int n_s, double alpha, double bg,
                                       int n_max = 30);

/// Distribution-level deconvolution used by corrected_estimates and the exact
/// oracle cross-checks: dist[k] = P(k detected), k = 0..dist.size()-1.
std::vector<double> correct_distribution(const std::vector<double>& dist,
                                         double alpha, double bg,
                                         double* clipped_mass = nullptr);

/// Everything at once, jackknifed; zeta needs the channel context.
StatsSummary analyze(std::span<const CountRecord> records,
                     const std::optional<ExperimentConfig>& cfg = std::nullopt,
                     int max_ns = 4);

std::string summary_to_json(const StatsSummary& s);

}  // namespace qmem
