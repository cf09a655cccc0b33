#pragma once

#include <span>
#include <vector>

#include "qmem/config.hpp"
#include "qmem/sampler.hpp"
#include "qmem/types.hpp"

namespace qmem {

/// Exact joint distribution over detected counts (n_S, n_AS) on {0..n_max}^2.
struct JointDistribution {
    int n_max = 0;
    std::vector<double> p;  // row-major, p[s * (n_max+1) + as]
    double tail_mass = 0.0; // probability truncated off the lattice

    double at(int s, int as) const { return p[s * (n_max + 1) + as]; }
    double& at(int s, int as) { return p[s * (n_max + 1) + as]; }
    std::vector<double> stokes_marginal() const;
    std::vector<double> antistokes_marginal() const;
};

/// Builds the exact distribution of the trial model: per-mode geometric
/// diagonal, mode convolution, binomial-thinning transitions for storage,
/// retrieval and detection, and Poisson background convolution per channel.
/// Errors when the truncation tail exceeds `tail_budget`, or when the model
/// has a dead time (Monte Carlo only).
JointDistribution exact_joint(const TrialModel& model, int n_max = 30,
                              double tail_budget = 1e-6);
JointDistribution exact_joint(const ValidatedConfig& cfg, int n_max = 30,
                              double tail_budget = 1e-6);

/// All estimators computed in closed form on the lattice; stderr fields are 0
/// and g2 uses the beamsplit identity <AS1*AS2> = <n(n-1)>/4.
StatsSummary exact_stats(const JointDistribution& dist, int max_ns = 4);

/// Total-variation distance between the lattice and an empirical batch;
/// empirical mass outside the lattice counts fully toward the distance.
double tv_distance(const JointDistribution& dist,
                   std::span<const CountRecord> records);

/// Per-estimator z-scores (monte carlo - exact) / stderr for the oracle check.
struct OracleCheck {
    double tv = 0.0;
    std::vector<std::pair<std::string, double>> z_scores;
    bool pass(double tv_limit = 1e-2, double z_limit = 3.0) const;
};
OracleCheck oracle_check(const TrialModel& model,
                         std::span<const CountRecord> records, int n_max = 30,
                         int max_ns = 4);

}  // namespace qmem
