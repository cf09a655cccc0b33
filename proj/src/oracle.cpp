#include "qmem/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qmem/stats.hpp"

namespace qmem {

namespace {

/// Geometric (Bose-Einstein) pmf truncated to {0..n_max}; lost mass returned.
std::vector<double> geometric_pmf(double nbar, int n_max, double& lost) {
    std::vector<double> p(n_max + 1, 0.0);
    if (nbar <= 0.0) {
        p[0] = 1.0;
        lost = 0.0;
        return p;
    }
    const double q = nbar / (1.0 + nbar);
    p[0] = 1.0 - q;
    for (int n = 1; n <= n_max; ++n) p[n] = p[n - 1] * q;
    double sum = 0.0;
    for (double v : p) sum += v;
    lost = 1.0 - sum;
    return p;
}

std::vector<double> convolve_trunc(const std::vector<double>& a,
                                   const std::vector<double>& b, int n_max,
                                   double& lost) {
    std::vector<double> out(n_max + 1, 0.0);
    for (int i = 0; i < static_cast<int>(a.size()); ++i) {
        if (a[i] == 0.0) continue;
        for (int j = 0; j < static_cast<int>(b.size()); ++j) {
            const int k = i + j;
            if (k <= n_max)
                out[k] += a[i] * b[j];
            else
                lost += a[i] * b[j];
        }
    }
    return out;
}

/// Columns of the binomial-thinning + Poisson-background transition on the
/// lattice; T[k][n] = P(k detected | n in). Mass above n_max goes to `lost`
/// weighted later by the source distribution.
struct Channel {
    std::vector<std::vector<double>> T;  // T[n] = column over k
    std::vector<double> overflow;        // per-n probability of k > n_max
};

Channel channel_transition(double alpha, double bg, int n_max) {
    Channel ch;
    std::vector<double> pois(n_max + 1);
    pois[0] = std::exp(-bg);
    for (int k = 1; k <= n_max; ++k) pois[k] = pois[k - 1] * bg / k;
    // pois_above[m] = P(Poisson > m)
    std::vector<double> pois_above(n_max + 1);
    double cum = 0.0;
    for (int m = 0; m <= n_max; ++m) {
        cum += pois[m];
        pois_above[m] = std::max(0.0, 1.0 - cum);
    }
    ch.T.resize(n_max + 1);
    ch.overflow.assign(n_max + 1, 0.0);
    std::vector<double> binom(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        if (alpha >= 1.0) {
            std::fill(binom.begin(), binom.begin() + n + 1, 0.0);
            binom[n] = 1.0;
        } else {
            binom[0] = std::pow(1.0 - alpha, n);
            for (int j = 1; j <= n; ++j)
                binom[j] = binom[j - 1] * (alpha / (1.0 - alpha)) *
                           static_cast<double>(n - j + 1) / j;
        }
        auto& col = ch.T[n];
        col.assign(n_max + 1, 0.0);
        double lost = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (binom[j] == 0.0) continue;
            for (int k = j; k <= n_max; ++k) col[k] += binom[j] * pois[k - j];
            lost += binom[j] * pois_above[n_max - j];
        }
        ch.overflow[n] = lost;
    }
    return ch;
}

}  // namespace

std::vector<double> JointDistribution::stokes_marginal() const {
    std::vector<double> m(n_max + 1, 0.0);
    for (int s = 0; s <= n_max; ++s)
        for (int as = 0; as <= n_max; ++as) m[s] += at(s, as);
    return m;
}

std::vector<double> JointDistribution::antistokes_marginal() const {
    std::vector<double> m(n_max + 1, 0.0);
    for (int s = 0; s <= n_max; ++s)
        for (int as = 0; as <= n_max; ++as) m[as] += at(s, as);
    return m;
}

JointDistribution exact_joint(const ValidatedConfig& cfg, int n_max,
                              double tail_budget) {
    return exact_joint(build_trial_model(cfg), n_max, tail_budget);
}

JointDistribution exact_joint(const TrialModel& model, int n_max,
                              double tail_budget) {
    if (n_max < 1 || n_max > 256)
        throw ValidationError({"oracle n_max must be in [1, 256]"});
    if (model.stokes.dead_time > 0.0 || model.antistokes.dead_time > 0.0)
        throw ValidationError(
            {"exact_joint does not model dead time (Monte Carlo only)"});

    // number-correlated pairs: the truth is diagonal, so track P(n) only
    double tail = 0.0;
    std::vector<double> truth = geometric_pmf(model.mean_per_mode, n_max, tail);
    for (int m = 1; m < model.mode_count; ++m) {
        double lost_mode = 0.0, lost_conv = 0.0;
        std::vector<double> one =
            geometric_pmf(model.mean_per_mode, n_max, lost_mode);
        truth = convolve_trunc(truth, one, n_max, lost_conv);
        tail += lost_mode + lost_conv;
    }

    const double q_as = model.storage_survival * model.retrieval_efficiency *
                        model.antistokes.efficiency;
    const Channel cs = channel_transition(model.stokes.efficiency,
                                          model.stokes.background, n_max);
    const Channel ca =
        channel_transition(q_as, model.antistokes.background, n_max);

    JointDistribution dist;
    dist.n_max = n_max;
    dist.p.assign(static_cast<std::size_t>(n_max + 1) * (n_max + 1), 0.0);
    for (int n = 0; n <= n_max; ++n) {
        if (truth[n] == 0.0) continue;
        const auto& colS = cs.T[n];
        const auto& colA = ca.T[n];
        for (int s = 0; s <= n_max; ++s) {
            if (colS[s] == 0.0) continue;
            const double w = truth[n] * colS[s];
            for (int as = 0; as <= n_max; ++as) dist.at(s, as) += w * colA[as];
        }
        // detected-count overflow off the lattice
        tail += truth[n] * (cs.overflow[n] + ca.overflow[n] -
                            cs.overflow[n] * ca.overflow[n]);
    }
    dist.tail_mass = tail;
    if (tail > tail_budget)
        throw SolverError("oracle tail mass " + std::to_string(tail) +
                          " exceeds budget " + std::to_string(tail_budget) +
                          "; raise n_max or lower the means");
    return dist;
}

StatsSummary exact_stats(const JointDistribution& dist, int max_ns) {
    StatsSummary s;
    const int n = dist.n_max;
    double mean_s = 0, mean_as = 0, var_diff = 0, mean_diff = 0;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            const double w = dist.at(a, b);
            mean_s += w * a;
            mean_as += w * b;
            mean_diff += w * (b - a);
        }
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b)
            var_diff += dist.at(a, b) * (b - a - mean_diff) * (b - a - mean_diff);
    s.mean_s = mean_s;
    s.mean_as = mean_as;
    s.psn_th = mean_s + mean_as;
    // the binomial 1/2 split makes var(d1-d2) equal the channel mean exactly
    s.psn_meas = {mean_s + mean_as, 0.0, 0};
    s.v_norm = var_diff / (mean_s + mean_as);
    s.v_stderr = 0.0;
    for (int a = 0; a <= std::min(n, max_ns); ++a) {
        double w = 0, m1 = 0, fac = 0;
        for (int b = 0; b <= n; ++b) {
            const double p = dist.at(a, b);
            w += p;
            m1 += p * b;
            fac += p * b * (b - 1.0);
        }
        if (w <= 0.0) continue;
        m1 /= w;
        fac /= w;
        // <AS1*AS2> = <k(k-1)>/4, <AS1> = <AS2> = <k>/2
        const double g2 = m1 > 0 ? fac / (m1 * m1) : 0.0;
        s.g2_by_ns[a] = {g2, 0.0, 0};
        s.mean_as_by_ns[a] = {m1, 0.0, 0};
        s.q_by_ns[a] = {m1 * (g2 - 1.0), 0.0, 0};
    }
    s.zeta = std::numeric_limits<double>::quiet_NaN();
    s.trials = 0;
    return s;
}

double tv_distance(const JointDistribution& dist,
                   std::span<const CountRecord> records) {
    if (records.empty()) throw ValidationError({"tv_distance needs records"});
    const int n = dist.n_max;
    std::vector<double> emp(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
    double outside = 0.0;
    const double w = 1.0 / static_cast<double>(records.size());
    for (const CountRecord& r : records) {
        const int a = static_cast<int>(r.stokes_total());
        const int b = static_cast<int>(r.antistokes_total());
        if (a > n || b > n)
            outside += w;
        else
            emp[static_cast<std::size_t>(a) * (n + 1) + b] += w;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < emp.size(); ++i)
        acc += std::abs(emp[i] - dist.p[i]);
    acc += std::abs(outside - dist.tail_mass);
    return 0.5 * acc;
}

bool OracleCheck::pass(double tv_limit, double z_limit) const {
    if (!(tv < tv_limit)) return false;
    for (const auto& [name, z] : z_scores)
        if (!(std::abs(z) < z_limit)) return false;
    return true;
}

OracleCheck oracle_check(const TrialModel& model,
                         std::span<const CountRecord> records, int n_max,
                         int max_ns) {
    const JointDistribution dist = exact_joint(model, n_max);
    const StatsSummary exact = exact_stats(dist, max_ns);
    OracleCheck out;
    out.tv = tv_distance(dist, records);

    auto push = [&out](const std::string& name, const Estimate& mc,
                       double truth) {
        if (!std::isfinite(mc.value) || !std::isfinite(mc.stderr) ||
            mc.stderr <= 0.0)
            return;
        out.z_scores.emplace_back(name, (mc.value - truth) / mc.stderr);
    };
    push("V", normalized_variance(records), exact.v_norm);
    push("psn_meas", psn_meas(records), exact.psn_meas.value);
    for (const auto& [ns, truth] : exact.g2_by_ns) {
        Estimate mc;
        try {
            mc = conditional_g2(records, ns);
        } catch (const ValidationError&) {
            continue;
        }
        if (mc.low_statistics) continue;
        push("g2@" + std::to_string(ns), mc, truth.value);
        push("mean_as@" + std::to_string(ns), conditional_mean(records, ns),
             exact.mean_as_by_ns.at(ns).value);
        push("Q@" + std::to_string(ns), mandel_q(records, ns),
             exact.q_by_ns.at(ns).value);
    }
    return out;
}

}  // namespace qmem
