#include "qmem/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace qmem {

namespace {

void check_channel(const ChannelModel& ch) {
    std::vector<std::string> bad;
    if (!(ch.efficiency >= 0.0 && ch.efficiency <= 1.0))
        bad.push_back("channel efficiency must be in [0,1]");
    if (!(ch.background >= 0.0))
        bad.push_back("channel background must be >= 0");
    if (!(ch.dead_time >= 0.0)) bad.push_back("dead_time must be >= 0");
    if (ch.afterpulsing)
        bad.push_back("afterpulsing is a placeholder and must stay disabled");
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

/// Inverse-CDF sample of an arrival time from the pulse shape.
double sample_arrival(const PulseProfile& pulse, const std::vector<double>& cdf,
                      TrialRng& rng) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t bin =
        std::min<std::size_t>(it - cdf.begin(), pulse.flux.size() - 1);
    const double lo = bin == 0 ? 0.0 : cdf[bin - 1];
    const double within = cdf[bin] > lo ? (u - lo) / (cdf[bin] - lo) : 0.5;
    return pulse.t0 + (static_cast<double>(bin) + within) * pulse.dt;
}

std::uint32_t censor(std::vector<double>& times, double dead_time) {
    std::sort(times.begin(), times.end());
    std::uint32_t kept = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (double t : times) {
        if (t - last >= dead_time) {
            ++kept;
            last = t;
        }
    }
    return kept;
}

}  // namespace

std::pair<std::uint32_t, std::uint32_t> detect(std::uint32_t n_true,
                                               const ChannelModel& channel,
                                               TrialRng& rng) {
    return detect(n_true, channel, PulseProfile{}, rng);
}

std::pair<std::uint32_t, std::uint32_t> detect(std::uint32_t n_true,
                                               const ChannelModel& channel,
                                               const PulseProfile& pulse,
                                               TrialRng& rng) {
    check_channel(channel);
    const std::uint32_t survivors = rng.binomial(n_true, channel.efficiency);
    const std::uint32_t background = rng.poisson(channel.background);
    const std::uint32_t total = survivors + background;
    const std::uint32_t d1 = rng.binomial(total, ChannelModel::split_ratio);
    const std::uint32_t d2 = total - d1;
    if (channel.dead_time <= 0.0) return {d1, d2};

    if (pulse.flux.empty() || pulse.dt <= 0.0 || pulse.total() <= 0.0)
        throw ValidationError(
            {"dead_time > 0 requires a nondegenerate pulse profile"});
    std::vector<double> cdf(pulse.flux.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pulse.flux.size(); ++i)
        cdf[i] = (acc += pulse.flux[i]);

    std::vector<double> t1, t2;
    t1.reserve(d1);
    t2.reserve(d2);
    for (std::uint32_t i = 0; i < d1; ++i)
        t1.push_back(sample_arrival(pulse, cdf, rng));
    for (std::uint32_t i = 0; i < d2; ++i)
        t2.push_back(sample_arrival(pulse, cdf, rng));
    return {censor(t1, channel.dead_time), censor(t2, channel.dead_time)};
}

double zeta(double n_bg, double alpha, double n_s) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ValidationError({"zeta requires alpha in (0,1]"});
    if (!(n_s > 0.0)) throw ValidationError({"zeta requires n_s > 0"});
    if (n_bg < 0.0) throw ValidationError({"zeta requires n_bg >= 0"});
    return n_bg * (1.0 - alpha) / (n_s * alpha);
}

}  // namespace qmem
