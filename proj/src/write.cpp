#include "qmem/write.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace qmem {

double mode_mean(double xi, double t) {
    if (xi < 0 || t < 0)
        throw ValidationError({"mode_mean requires xi >= 0 and t >= 0"});
    const double g = xi * t;
    if (g > 30.0)
        throw ValidationError({"xi*t = " + std::to_string(g) +
                               " exceeds the gain guard (30)"});
    return std::expm1(g);
}

PulseProfile stokes_flux(const ValidatedConfig& cfg, int samples) {
    if (samples < 1) throw ValidationError({"stokes_flux needs samples >= 1"});
    const double tw = cfg.write_duration();
    if (tw <= 0)
        throw ValidationError({"write_duration must be > 0 to sample a pulse"});
    const double xi = cfg.collective_rate();
    mode_mean(xi, tw);  // trigger the gain guard up front

    PulseProfile p;
    p.t0 = 0.0;
    p.dt = tw / samples;
    p.flux.resize(samples);
    const double nmodes = cfg.mode_count();
    double prev = 0.0;  // n(t_i) per mode
    for (int i = 0; i < samples; ++i) {
        const double next = std::expm1(xi * p.dt * (i + 1));
        p.flux[i] = nmodes * (next - prev) / p.dt;
        prev = next;
    }
    return p;
}

SpinWaveProfile spin_profile(const ValidatedConfig& cfg, int z_points) {
    if (z_points < 64)
        throw ValidationError({"spin_profile needs at least 64 z points, got " +
                               std::to_string(z_points)});
    const double tw = cfg.write_duration();
    const double gain = cfg.collective_rate() * tw;  // xi * t_W
    if (gain > 30.0)
        throw ValidationError({"xi*t_W = " + std::to_string(gain) +
                               " exceeds the gain guard (30)"});

    const int nz = z_points;
    const int nt = z_points;  // normalized write time on the same resolution
    const double dz = 1.0 / (nz - 1);
    const double ds = 1.0 / (nt - 1);

    // Box-scheme solve of d2h/(dz ds) = gain * h with h(z,0) = h(0,s) = 1;
    // h is the response kernel of the write equations, and
    // density(z) = gain * integral h(z,s)^2 ds up to normalization.
    std::vector<double> row(nt, 1.0);   // h at current z for all s
    std::vector<double> dens(nz, 0.0);
    const double c = 0.25 * gain * dz * ds;

    auto accumulate = [&](const std::vector<double>& h, int iz) {
        double s = 0.5 * (h[0] * h[0] + h[nt - 1] * h[nt - 1]);
        for (int j = 1; j < nt - 1; ++j) s += h[j] * h[j];
        dens[iz] = gain * s * ds;
    };

    accumulate(row, 0);
    std::vector<double> next(nt);
    for (int i = 1; i < nz; ++i) {
        next[0] = 1.0;
        for (int j = 1; j < nt; ++j) {
            const double rhs = row[j] + next[j - 1] - row[j - 1] +
                               c * (row[j] + next[j - 1] + row[j - 1]);
            next[j] = rhs / (1.0 - c);
        }
        row.swap(next);
        accumulate(row, i);
    }

    SpinWaveProfile prof;
    prof.z.resize(nz);
    for (int i = 0; i < nz; ++i) prof.z[i] = i * dz;
    prof.density = std::move(dens);

    // One flipped spin per emitted Stokes photon fixes the magnitude.
    const double target =
        cfg.mode_count() * mode_mean(cfg.collective_rate(), tw);
    const double raw = prof.trapz();
    if (raw > 0.0 && target > 0.0) {
        const double scale = target / raw;
        for (double& d : prof.density) d *= scale;
        prof.total = target;
    } else {
        for (double& d : prof.density) d = 0.0;
        prof.total = 0.0;
    }
    return prof;
}

WriteResult write_stage(const ValidatedConfig& cfg, int flux_samples,
                        int z_points) {
    WriteResult r;
    r.per_mode_mean = mode_mean(cfg.collective_rate(), cfg.write_duration());
    r.stokes_flux = stokes_flux(cfg, flux_samples);
    r.spin_profile = spin_profile(cfg, z_points);
    return r;
}

}  // namespace qmem
