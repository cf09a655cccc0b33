#include "qmem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "qmem/detection.hpp"

namespace qmem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Jackknife stderr from a stream of leave-one-out estimates (Welford).
class JackknifeAccumulator {
public:
    void add(double theta) {
        ++m_;
        const double d = theta - mean_;
        mean_ += d / static_cast<double>(m_);
        m2_ += d * (theta - mean_);
    }
    double stderr() const {
        if (m_ < 2) return kNaN;
        const double m = static_cast<double>(m_);
        return std::sqrt(m2_ * (m - 1.0) / m);
    }

private:
    std::uint64_t m_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
};

struct DiffMoments {
    double sx = 0, sxx = 0;   // s1 - s2
    double sy = 0, syy = 0;   // as1 - as2
    double sd = 0, sdd = 0;   // (as1+as2) - (s1+s2)
    std::uint64_t n = 0;
};

DiffMoments diff_moments(std::span<const CountRecord> records) {
    DiffMoments m;
    for (const CountRecord& r : records) {
        const double x = static_cast<double>(r.s1) - static_cast<double>(r.s2);
        const double y = static_cast<double>(r.as1) - static_cast<double>(r.as2);
        const double d = static_cast<double>(r.antistokes_total()) -
                         static_cast<double>(r.stokes_total());
        m.sx += x;
        m.sxx += x * x;
        m.sy += y;
        m.syy += y * y;
        m.sd += d;
        m.sdd += d * d;
        ++m.n;
    }
    return m;
}

double sample_var(double s, double ss, double n) {
    // two-pass-equivalent form; (n-1) normalization
    return std::max(0.0, (ss - s * s / n) / (n - 1.0));
}

double psn_of(const DiffMoments& m, double n) {
    return sample_var(m.sx, m.sxx, n) + sample_var(m.sy, m.syy, n);
}

double v_of(const DiffMoments& m, double n) {
    return sample_var(m.sd, m.sdd, n) / psn_of(m, n);
}

}  // namespace

Estimate psn_meas(std::span<const CountRecord> records) {
    if (records.size() < 2)
        throw ValidationError({"psn_meas needs at least 2 trials"});
    const DiffMoments m = diff_moments(records);
    const double n = static_cast<double>(m.n);
    Estimate e;
    e.value = psn_of(m, n);
    e.count = m.n;
    JackknifeAccumulator jk;
    for (const CountRecord& r : records) {
        const double x = static_cast<double>(r.s1) - static_cast<double>(r.s2);
        const double y = static_cast<double>(r.as1) - static_cast<double>(r.as2);
        DiffMoments mi = m;
        mi.sx -= x;
        mi.sxx -= x * x;
        mi.sy -= y;
        mi.syy -= y * y;
        jk.add(psn_of(mi, n - 1.0));
    }
    e.stderr = jk.stderr();
    return e;
}

Estimate normalized_variance(std::span<const CountRecord> records) {
    if (records.size() < 2)
        throw ValidationError({"normalized_variance needs at least 2 trials"});
    const DiffMoments m = diff_moments(records);
    const double n = static_cast<double>(m.n);
    if (psn_of(m, n) <= 0.0)
        throw ValidationError({"degenerate batch: measured PSN is zero"});
    Estimate e;
    e.value = v_of(m, n);
    e.count = m.n;
    JackknifeAccumulator jk;
    for (const CountRecord& r : records) {
        const double x = static_cast<double>(r.s1) - static_cast<double>(r.s2);
        const double y = static_cast<double>(r.as1) - static_cast<double>(r.as2);
        const double d = static_cast<double>(r.antistokes_total()) -
                         static_cast<double>(r.stokes_total());
        DiffMoments mi = m;
        mi.sx -= x;
        mi.sxx -= x * x;
        mi.sy -= y;
        mi.syy -= y * y;
        mi.sd -= d;
        mi.sdd -= d * d;
        if (psn_of(mi, n - 1.0) > 0.0) jk.add(v_of(mi, n - 1.0));
    }
    e.stderr = jk.stderr();
    return e;
}

namespace {

struct CondMoments {
    double s12 = 0;  // sum as1*as2
    double s1 = 0, s2 = 0, st = 0;  // sums of as1, as2, as1+as2
    std::uint64_t m = 0;
};

CondMoments cond_moments(std::span<const CountRecord> records, int n_s) {
    CondMoments c;
    for (const CountRecord& r : records) {
        if (static_cast<int>(r.stokes_total()) != n_s) continue;
        c.s12 += static_cast<double>(r.as1) * static_cast<double>(r.as2);
        c.s1 += r.as1;
        c.s2 += r.as2;
        c.st += r.antistokes_total();
        ++c.m;
    }
    return c;
}

double g2_of(const CondMoments& c, double m) {
    return c.s1 > 0 && c.s2 > 0 ? m * c.s12 / (c.s1 * c.s2) : kNaN;
}

double q_of(const CondMoments& c, double m) {
    const double g2 = g2_of(c, m);
    return (c.st / m) * (g2 - 1.0);
}

template <typename F>
Estimate cond_estimate(std::span<const CountRecord> records, int n_s, F value) {
    if (n_s < 0) throw ValidationError({"n_s must be >= 0"});
    const CondMoments c = cond_moments(records, n_s);
    if (c.m == 0)
        throw ValidationError({"no trials with s1+s2 == " + std::to_string(n_s)});
    Estimate e;
    e.value = value(c, static_cast<double>(c.m));
    e.count = c.m;
    e.low_statistics = c.m < 100;
    if (c.m < 2) {
        e.stderr = kNaN;
        return e;
    }
    JackknifeAccumulator jk;
    for (const CountRecord& r : records) {
        if (static_cast<int>(r.stokes_total()) != n_s) continue;
        CondMoments ci = c;
        ci.s12 -= static_cast<double>(r.as1) * static_cast<double>(r.as2);
        ci.s1 -= r.as1;
        ci.s2 -= r.as2;
        ci.st -= r.antistokes_total();
        const double theta = value(ci, static_cast<double>(c.m - 1));
        if (std::isfinite(theta)) jk.add(theta);
    }
    e.stderr = jk.stderr();
    return e;
}

}  // namespace

Estimate conditional_g2(std::span<const CountRecord> records, int n_s) {
    return cond_estimate(records, n_s,
                         [](const CondMoments& c, double m) { return g2_of(c, m); });
}

Estimate conditional_mean(std::span<const CountRecord> records, int n_s) {
    return cond_estimate(records, n_s,
                         [](const CondMoments& c, double m) { return c.st / m; });
}

Estimate mandel_q(std::span<const CountRecord> records, int n_s) {
    return cond_estimate(records, n_s,
                         [](const CondMoments& c, double m) { return q_of(c, m); });
}

Estimate conditional_mean_slope(std::span<const CountRecord> records) {
    // inverse-variance weighted straight-line fit through (n_s, mean_as)
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    int used = 0;
    for (int ns = 0; ns <= 4; ++ns) {
        CondMoments c = cond_moments(records, ns);
        if (c.m < 2) continue;
        Estimate e = conditional_mean(records, ns);
        if (!std::isfinite(e.stderr) || e.stderr <= 0) continue;
        const double w = 1.0 / (e.stderr * e.stderr);
        const double x = ns;
        sw += w;
        swx += w * x;
        swy += w * e.value;
        swxx += w * x * x;
        swxy += w * x * e.value;
        ++used;
    }
    if (used < 2)
        throw ValidationError({"conditional_mean_slope needs >= 2 populated bins"});
    const double denom = sw * swxx - swx * swx;
    Estimate slope;
    slope.value = (sw * swxy - swx * swy) / denom;
    slope.stderr = std::sqrt(sw / denom);
    slope.count = used;
    return slope;
}

namespace {

/// Dense transition matrix of thinning alpha + Poisson bg on {0..n_max}.
std::vector<double> transition_matrix(int n_max, double alpha, double bg) {
    const int n = n_max + 1;
    std::vector<double> pois(n);
    pois[0] = std::exp(-bg);
    for (int k = 1; k < n; ++k) pois[k] = pois[k - 1] * bg / k;
    std::vector<double> M(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> binom(n);
    for (int col = 0; col < n; ++col) {
        // Binomial(col, alpha) row weights
        if (alpha >= 1.0) {
            std::fill(binom.begin(), binom.begin() + col + 1, 0.0);
            binom[col] = 1.0;
        } else {
            binom[0] = std::pow(1.0 - alpha, col);
            for (int j = 1; j <= col; ++j)
                binom[j] = binom[j - 1] * (alpha / (1.0 - alpha)) *
                           static_cast<double>(col - j + 1) / j;
        }
        for (int j = 0; j <= col; ++j)
            for (int k = j; k < n; ++k)
                M[static_cast<std::size_t>(k) * n + col] += binom[j] * pois[k - j];
    }
    return M;
}

/// Gauss-Jordan inverse with partial pivoting; returns 1-norm condition.
double invert(std::vector<double>& M, int n) {
    auto norm1 = [n](const std::vector<double>& A) {
        double best = 0.0;
        for (int c = 0; c < n; ++c) {
            double s = 0.0;
            for (int r = 0; r < n; ++r)
                s += std::abs(A[static_cast<std::size_t>(r) * n + c]);
            best = std::max(best, s);
        }
        return best;
    };
    const double na = norm1(M);
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(M[static_cast<std::size_t>(r) * n + col]) >
                std::abs(M[static_cast<std::size_t>(pivot) * n + col]))
                pivot = r;
        if (M[static_cast<std::size_t>(pivot) * n + col] == 0.0)
            throw SolverError("singular correction matrix");
        if (pivot != col)
            for (int c = 0; c < n; ++c) {
                std::swap(M[static_cast<std::size_t>(pivot) * n + c],
                          M[static_cast<std::size_t>(col) * n + c]);
                std::swap(inv[static_cast<std::size_t>(pivot) * n + c],
                          inv[static_cast<std::size_t>(col) * n + c]);
            }
        const double d = M[static_cast<std::size_t>(col) * n + col];
        for (int c = 0; c < n; ++c) {
            M[static_cast<std::size_t>(col) * n + c] /= d;
            inv[static_cast<std::size_t>(col) * n + c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = M[static_cast<std::size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                M[static_cast<std::size_t>(r) * n + c] -=
                    f * M[static_cast<std::size_t>(col) * n + c];
                inv[static_cast<std::size_t>(r) * n + c] -=
                    f * inv[static_cast<std::size_t>(col) * n + c];
            }
        }
    }
    const double cond = na * norm1(inv);
    M.swap(inv);
    return cond;
}

}  // namespace

std::vector<double> correct_distribution(const std::vector<double>& dist,
                                         double alpha, double bg,
                                         double* clipped_mass) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ValidationError({"correction alpha must be in (0,1]"});
    if (bg < 0.0) throw ValidationError({"correction background must be >= 0"});
    const int n = static_cast<int>(dist.size());
    std::vector<double> M = transition_matrix(n - 1, alpha, bg);
    const double cond = invert(M, n);
    if (cond > 1e8)
        throw SolverError("correction matrix ill-conditioned (cond ~ " +
                          std::to_string(cond) + ")");
    std::vector<double> x(n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            x[r] += M[static_cast<std::size_t>(r) * n + c] * dist[c];
    double clipped = 0.0, kept = 0.0;
    for (double& v : x) {
        if (v < 0.0) {
            clipped -= v;
            v = 0.0;
        }
        kept += v;
    }
    if (kept > 0.0)
        for (double& v : x) v /= kept;
    if (clipped_mass) *clipped_mass = clipped;
    return x;
}

CorrectedEstimates corrected_estimates(std::span<const CountRecord> records,
                                       int n_s, double alpha, double bg,
                                       int n_max) {
    if (n_max < 1) throw ValidationError({"n_max must be >= 1"});
    std::vector<double> dist(n_max + 1, 0.0);
    std::uint64_t m = 0;
    for (const CountRecord& r : records) {
        if (static_cast<int>(r.stokes_total()) != n_s) continue;
        const std::uint32_t k = r.antistokes_total();
        if (static_cast<int>(k) > n_max)
            throw ValidationError(
                {"observed count " + std::to_string(k) +
                 " exceeds n_max; raise n_max for corrected_estimates"});
        dist[k] += 1.0;
        ++m;
    }
    if (m == 0)
        throw ValidationError({"no trials with s1+s2 == " + std::to_string(n_s)});
    for (double& v : dist) v /= static_cast<double>(m);

    CorrectedEstimates out;
    const std::vector<double> x =
        correct_distribution(dist, alpha, bg, &out.clipped_mass);
    double mean = 0.0, fac = 0.0;
    for (int k = 0; k <= n_max; ++k) {
        mean += k * x[k];
        fac += static_cast<double>(k) * (k - 1.0) * x[k];
    }
    out.mean = mean;
    out.q = mean > 0.0 ? mean * (fac / (mean * mean) - 1.0) : 0.0;
    return out;
}

StatsSummary analyze(std::span<const CountRecord> records,
                     const std::optional<ExperimentConfig>& cfg, int max_ns) {
    if (records.size() < 2)
        throw ValidationError({"analyze needs at least 2 trials"});
    StatsSummary s;
    s.trials = records.size();
    double sum_s = 0, sum_as = 0;
    for (const CountRecord& r : records) {
        sum_s += r.stokes_total();
        sum_as += r.antistokes_total();
    }
    s.mean_s = sum_s / static_cast<double>(records.size());
    s.mean_as = sum_as / static_cast<double>(records.size());
    s.psn_th = s.mean_s + s.mean_as;
    s.psn_meas = psn_meas(records);
    const Estimate v = normalized_variance(records);
    s.v_norm = v.value;
    s.v_stderr = v.stderr;
    for (int ns = 0; ns <= max_ns; ++ns) {
        CondMoments c = cond_moments(records, ns);
        if (c.m == 0) continue;
        s.g2_by_ns[ns] = conditional_g2(records, ns);
        s.mean_as_by_ns[ns] = conditional_mean(records, ns);
        s.q_by_ns[ns] = mandel_q(records, ns);
    }
    if (cfg && s.mean_s > 0.0 && cfg->stokes_efficiency > 0.0)
        s.zeta = zeta(cfg->stokes_background, cfg->stokes_efficiency, s.mean_s);
    else
        s.zeta = kNaN;
    return s;
}

namespace {

nlohmann::json estimate_json(const Estimate& e) {
    nlohmann::json j;
    j["value"] = e.value;
    j["stderr"] = e.stderr;
    j["count"] = e.count;
    if (e.low_statistics) j["low_statistics"] = true;
    return j;
}

}  // namespace

std::string summary_to_json(const StatsSummary& s) {
    nlohmann::json j;
    j["mean_s"] = s.mean_s;
    j["mean_as"] = s.mean_as;
    j["psn_meas"] = estimate_json(s.psn_meas);
    j["psn_th"] = s.psn_th;
    j["v_norm"] = s.v_norm;
    j["v_stderr"] = s.v_stderr;
    auto map_json = [](const std::map<int, Estimate>& m) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, e] : m) out[std::to_string(k)] = estimate_json(e);
        return out;
    };
    j["g2_by_ns"] = map_json(s.g2_by_ns);
    j["mean_as_by_ns"] = map_json(s.mean_as_by_ns);
    j["q_by_ns"] = map_json(s.q_by_ns);
    if (std::isfinite(s.zeta))
        j["zeta"] = s.zeta;
    else
        j["zeta"] = nullptr;
    j["trials"] = s.trials;
    return j.dump(2) + "\n";
}

}  // namespace qmem
