#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmem {

/// Input validation failure; carries one message per violated bound.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& p : v) s += "\n  - " + p;
        return s;
    }
    std::vector<std::string> problems_;
};

/// Numerical solver failure (CFL violation, nonconvergence, ill-conditioning).
class SolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sampled photon flux on a uniform time grid.
///
/// flux[i] is the bin-averaged flux (photons/us) over [t0 + i*dt, t0 + (i+1)*dt),
/// so sum(flux)*dt equals the pulse's total mean photon number exactly.
struct PulseProfile {
    double t0 = 0.0;   // us
    double dt = 0.0;   // us
    std::vector<double> flux;  // photons/us, nonnegative

    double total() const {
        double s = 0.0;
        for (double f : flux) s += f;
        return s * dt;
    }
    double t_end() const { return t0 + dt * static_cast<double>(flux.size()); }
};

/// Spin-wave excitation density on a uniform z grid over the normalized cell [0,1].
struct SpinWaveProfile {
    std::vector<double> z;        // uniform grid, >= 64 points, z[0]=0, z.back()=1
    std::vector<double> density;  // flipped spins per unit length, >= 0
    double total = 0.0;           // trapezoidal integral of density over z

    double trapz() const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < z.size(); ++i)
            s += 0.5 * (density[i] + density[i + 1]) * (z[i + 1] - z[i]);
        return s;
    }
};

/// One protocol trial: latent truths plus the four detector counts.
struct CountRecord {
    std::uint32_t true_stokes = 0;  // Stokes photons emitted in the write window
    std::uint32_t true_spin = 0;    // spin quanta created (equals true_stokes)
    std::uint32_t retrieved = 0;    // anti-Stokes photons surviving storage+retrieval
    std::uint32_t s1 = 0, s2 = 0;   // Stokes detector counts
    std::uint32_t as1 = 0, as2 = 0; // anti-Stokes detector counts

    std::uint32_t stokes_total() const { return s1 + s2; }
    std::uint32_t antistokes_total() const { return as1 + as2; }

    bool operator==(const CountRecord&) const = default;
};

/// Point estimate with a jackknife standard error.
struct Estimate {
    double value = 0.0;
    double stderr = 0.0;
    std::uint64_t count = 0;       // trials (or subsample size) behind it
    bool low_statistics = false;   // subsample below the reliability floor
};

/// Every estimator the analysis reports, keyed the way the JSON output is.
struct StatsSummary {
    double mean_s = 0.0;
    double mean_as = 0.0;
    Estimate psn_meas;
    double psn_th = 0.0;           // mean_s + mean_as from the same sample
    double v_norm = 0.0;
    double v_stderr = 0.0;
    std::map<int, Estimate> g2_by_ns;
    std::map<int, Estimate> mean_as_by_ns;
    std::map<int, Estimate> q_by_ns;
    double zeta = 0.0;             // NaN when the config context is unknown
    std::uint64_t trials = 0;
};

}  // namespace qmem
