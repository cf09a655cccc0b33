#include "qmem/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qmem/retrieval.hpp"
#include "qmem/write.hpp"

namespace qmem {

ForwardObservables predict_observables(const ExperimentConfig& cfg,
                                       double retrieval_efficiency) {
    const double xi = cfg.optical_depth * cfg.single_atom_rate;
    const double nbar = std::expm1(xi * cfg.write_duration);
    const double mu = cfg.mode_count * nbar;
    const double var_n = mu * (1.0 + nbar);
    const double p_d = std::exp(-cfg.decoherence_rate * cfg.delay);
    const double qs = cfg.stokes_efficiency;
    const double qa = p_d * retrieval_efficiency * cfg.antistokes_efficiency;
    const double bgs = cfg.stokes_background;
    const double bga = cfg.antistokes_background;

    ForwardObservables f;
    f.mean_s = qs * mu + bgs;
    f.mean_as = qa * mu + bga;
    const double var_diff = (qs * (1 - qs) + qa * (1 - qa)) * mu + bgs + bga +
                            (qs - qa) * (qs - qa) * var_n;
    f.v_norm = var_diff / (f.mean_s + f.mean_as);
    f.zeta = f.mean_s > 0 && qs > 0
                 ? bgs * (1.0 - qs) / (f.mean_s * qs)
                 : 0.0;
    return f;
}

namespace {

/// Nelder-Mead simplex minimizer; good enough for this smooth 4-D objective.
double nelder_mead(std::vector<double>& x,
                   const std::function<double(const std::vector<double>&)>& f,
                   int max_iter, double tol, int& evals) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> simplex(n + 1, x);
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        simplex[i + 1][i] += simplex[i + 1][i] != 0.0 ? 0.1 * simplex[i + 1][i]
                                                      : 0.1;
    for (std::size_t i = 0; i <= n; ++i) {
        fx[i] = f(simplex[i]);
        ++evals;
    }
    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::size_t> order(n + 1);
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&fx](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (fx[best] < tol || std::abs(fx[worst] - fx[best]) < tol * 1e-3) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
        }
        auto blend = [&](double c) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + c * (simplex[worst][j] - centroid[j]);
            return p;
        };
        std::vector<double> refl = blend(-1.0);
        double f_refl = f(refl);
        ++evals;
        if (f_refl < fx[best]) {
            std::vector<double> exp_p = blend(-2.0);
            double f_exp = f(exp_p);
            ++evals;
            if (f_exp < f_refl) {
                simplex[worst] = exp_p;
                fx[worst] = f_exp;
            } else {
                simplex[worst] = refl;
                fx[worst] = f_refl;
            }
        } else if (f_refl < fx[second]) {
            simplex[worst] = refl;
            fx[worst] = f_refl;
        } else {
            std::vector<double> contr = blend(0.5);
            double f_contr = f(contr);
            ++evals;
            if (f_contr < fx[worst]) {
                simplex[worst] = contr;
                fx[worst] = f_contr;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] =
                            simplex[best][j] +
                            0.5 * (simplex[i][j] - simplex[best][j]);
                    fx[i] = f(simplex[i]);
                    ++evals;
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fx[i] < fx[best]) best = i;
    x = simplex[best];
    return fx[best];
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

CalibrationOutcome calibrate(const ValidatedConfig& base,
                             const CalibrationTargets& targets,
                             double retrieval_efficiency) {
    if (!(retrieval_efficiency > 0.0 && retrieval_efficiency <= 1.0))
        throw ValidationError({"calibrate needs retrieval efficiency in (0,1]"});
    if (targets.mean_s <= 0 || targets.mean_as <= 0 || targets.v_norm <= 0 ||
        targets.zeta <= 0)
        throw ValidationError({"calibration targets must be positive"});

    ExperimentConfig work = base.raw();
    work.delay = 0.0;  // targets are tau_d = 0 observables

    auto unpack = [&](const std::vector<double>& x) {
        ExperimentConfig c = work;
        c.single_atom_rate = std::exp(x[0]);
        c.antistokes_efficiency = expit(x[1]);
        c.stokes_background = std::exp(x[2]);
        c.antistokes_background = std::exp(x[3]);
        return c;
    };
    auto objective = [&](const std::vector<double>& x) {
        const ForwardObservables f =
            predict_observables(unpack(x), retrieval_efficiency);
        const double r1 = f.mean_s / targets.mean_s - 1.0;
        const double r2 = f.mean_as / targets.mean_as - 1.0;
        const double r3 = f.v_norm / targets.v_norm - 1.0;
        const double r4 = f.zeta / targets.zeta - 1.0;
        return r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4;
    };

    std::vector<double> x = {std::log(std::max(1e-6, work.single_atom_rate)),
                             logit(std::clamp(work.antistokes_efficiency,
                                              0.01, 0.99)),
                             std::log(0.2), std::log(0.2)};
    CalibrationOutcome out;
    double best = nelder_mead(x, objective, 4000, 1e-22, out.evaluations);
    // restart from the found point if the simplex collapsed early
    if (best > 1e-16) best = nelder_mead(x, objective, 4000, 1e-22, out.evaluations);

    out.config = unpack(x);
    out.config.delay = base.raw().delay;
    out.retrieval_efficiency = retrieval_efficiency;
    out.residual = std::sqrt(best);
    validate(out.config);
    return out;
}

double calibrate_coupling(const ValidatedConfig& base, double efficiency_target,
                          double lo, double hi) {
    if (!(efficiency_target > 0.0 && efficiency_target < 1.0))
        throw ValidationError({"coupling target efficiency must be in (0,1)"});
    const SpinWaveProfile prof = spin_profile(base);
    auto eff_at = [&](double k) {
        return retrieve_finite_depth(prof, base, CouplingSchedule::constant(k))
            .efficiency;
    };
    double f_lo = eff_at(lo) - efficiency_target;
    double f_hi = eff_at(hi) - efficiency_target;
    if (f_lo * f_hi > 0)
        throw SolverError("coupling bracket does not straddle the efficiency "
                          "target; efficiencies " +
                          std::to_string(f_lo + efficiency_target) + " / " +
                          std::to_string(f_hi + efficiency_target));
    for (int i = 0; i < 48 && (hi - lo) > 1e-4 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = eff_at(mid) - efficiency_target;
        if (f_lo * f_mid <= 0) {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace qmem
