#include <doctest.h>

#include <cmath>

#include "qmem/write.hpp"

using namespace qmem;

namespace {

ValidatedConfig make(double eta, double rate, double t_w, int modes) {
    ExperimentConfig c;
    c.optical_depth = eta;
    c.single_atom_rate = rate;
    c.write_duration = t_w;
    c.mode_count = modes;
    return validate(c);
}

}  // namespace

TEST_CASE("mode_mean closed form") {
    CHECK(mode_mean(0.5, 0.0) == 0.0);
    CHECK(mode_mean(0.0, 3.0) == 0.0);
    CHECK(mode_mean(0.1, 1.0) == doctest::Approx(0.10517091808).epsilon(1e-10));
    CHECK_THROWS_AS(mode_mean(31.0, 1.0), ValidationError);
    CHECK_THROWS_AS(mode_mean(-0.1, 1.0), ValidationError);
}

TEST_CASE("mode_mean solves dn/dt = xi(1+n) to 1e-4 on a 1e-3 grid") {
    const double xi = 0.7;
    for (double t = 0.1; t < 2.0; t += 0.1) {
        const double h = 1e-3;
        const double lhs = (mode_mean(xi, t + h) - mode_mean(xi, t - h)) / (2 * h);
        const double rhs = xi * (1.0 + mode_mean(xi, t));
        CHECK(std::abs(lhs / rhs - 1.0) < 1e-4);
    }
}

TEST_CASE("closed-form flux matches the two-term series to second order") {
    // at xi*t = 0.2 the flux ratio exp(0.2)/(1+0.2) leaves only the
    // second-order remainder exp(0.2) - 1.2
    const double remainder = std::exp(0.2) - 1.2;
    CHECK(remainder == doctest::Approx(0.0214027582).epsilon(1e-7));
    CHECK(remainder / 1.2 < 0.022);
    const double flux_exact = 4 * 1.0 * std::exp(0.2);
    const double flux_series = 4 * 1.0 * (1.0 + 0.2);
    CHECK(std::abs(flux_exact / flux_series - 1.0) < 0.022);
}

TEST_CASE("stokes_flux is zero without drive and integrates exactly") {
    const auto zero = stokes_flux(make(20, 0.0, 1.6, 4));
    for (double f : zero.flux) CHECK(f == 0.0);

    const auto p = stokes_flux(make(20, 0.05, 1.6, 4));
    const double expect = 4 * std::expm1(1.0 * 1.6);
    CHECK(std::abs(p.total() / expect - 1.0) < 1e-9);
}

TEST_CASE("flux is flat in the weak regime and rising in the strong one") {
    // total 1 photon across 10 modes keeps xi*t_W small
    const double rate = std::log1p(0.1) / 1.6 / 20.0;
    const auto weak = stokes_flux(make(20, rate, 1.6, 10));
    const double lo = *std::min_element(weak.flux.begin(), weak.flux.end());
    const double hi = *std::max_element(weak.flux.begin(), weak.flux.end());
    CHECK(hi / lo < 1.1);

    const double rate3 = std::log1p(3.0) / 1.6 / 20.0;  // single strong mode
    const auto strong = stokes_flux(make(20, rate3, 1.6, 1));
    CHECK(strong.flux.back() > strong.flux.front());
}

TEST_CASE("flux and mode mean grow monotonically in xi and t") {
    double prev = -1.0;
    for (double xi : {0.1, 0.3, 0.5, 0.9}) {
        const double m = mode_mean(xi, 1.2);
        CHECK(m > prev);
        prev = m;
    }
    const auto p = stokes_flux(make(20, 0.04, 1.6, 4));
    for (std::size_t i = 1; i < p.flux.size(); ++i)
        CHECK(p.flux[i] >= p.flux[i - 1]);
}

TEST_CASE("spin profile is uniform at low gain") {
    const double rate = 0.05 / (1.6 * 20.0);  // xi*t_W = 0.05
    const auto prof = spin_profile(make(20, rate, 1.6, 4));
    const double front = prof.density.front();
    const double back = prof.density.back();
    CHECK(back / front < 1.1);
    CHECK(back >= front);
}

TEST_CASE("spin profile grows toward the cell end at n_spin = 3") {
    // eta = 20; rate chosen so the stored total is 3 across 4 modes
    const double rate = std::log1p(3.0 / 4.0) / (1.6 * 20.0);
    const auto prof = spin_profile(make(20, rate, 1.6, 4));
    CHECK(prof.total == doctest::Approx(3.0).epsilon(1e-9));
    const double ratio = prof.density.back() / prof.density.front();
    CHECK(ratio > 1.5);
    // regression pin for the end-to-front contrast of this solver
    // (the Bessel-kernel value of the same integral is 1.74309)
    CHECK(ratio == doctest::Approx(1.7431).epsilon(2e-4));
    for (std::size_t i = 1; i < prof.density.size(); ++i)
        CHECK(prof.density[i] >= prof.density[i - 1]);
}

TEST_CASE("spin profile matches the Bessel-kernel solution") {
    // independent oracle: density(z) ~ g * integral_0^1 I0(2 sqrt(g z u))^2 du
    const double g = std::log1p(3.0);  // strong single-mode case
    const double rate = g / (1.6 * 20.0);
    const auto prof = spin_profile(make(20, rate, 1.6, 1), 256);

    auto oracle = [&](double z) {
        const int q = 2001;  // Simpson
        double acc = 0.0;
        for (int i = 0; i < q; ++i) {
            const double u = i / double(q - 1);
            const double b = std::cyl_bessel_i(0.0, 2.0 * std::sqrt(g * z * u));
            const double w = (i == 0 || i == q - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * b * b;
        }
        return g * acc / (3.0 * (q - 1));
    };
    // compare shapes normalized at z = 1, at exact grid nodes
    const double scale = prof.density.back() / oracle(1.0);
    for (std::size_t i : {std::size_t{0}, std::size_t{64}, std::size_t{128},
                          std::size_t{192}, prof.z.size() - 1}) {
        CHECK(prof.density[i] ==
              doctest::Approx(scale * oracle(prof.z[i])).epsilon(1e-4));
    }
}

TEST_CASE("spin total equals the Stokes photon total within 1%") {
    for (double g : {0.2, 1.0, 3.0}) {
        const double rate = g / (1.6 * 20.0);
        const auto cfg = make(20, rate, 1.6, 4);
        const auto prof = spin_profile(cfg);
        const auto flux = stokes_flux(cfg);
        CHECK(std::abs(prof.total / flux.total() - 1.0) < 0.01);
        CHECK(std::abs(prof.trapz() / prof.total - 1.0) < 1e-6);
    }
}

TEST_CASE("doubling the grid moves the solution by less than 1e-4") {
    const double rate = std::log1p(3.0 / 4.0) / (1.6 * 20.0);
    const auto cfg = make(20, rate, 1.6, 4);
    const auto a = spin_profile(cfg, 256);
    const auto b = spin_profile(cfg, 512);
    CHECK(std::abs(a.total / b.total - 1.0) < 1e-4);
    // totals are pinned by normalization; the end-to-front contrast is the
    // grid-sensitive quantity (endpoints are exact grid nodes in both runs)
    const double ra = a.density.back() / a.density.front();
    const double rb = b.density.back() / b.density.front();
    CHECK(std::abs(ra / rb - 1.0) < 1e-4);
}

TEST_CASE("grids below 64 points are rejected") {
    CHECK_THROWS_AS(spin_profile(make(20, 0.01, 1.6, 4), 32), ValidationError);
}

TEST_CASE("write_stage ties the pieces together") {
    const auto r = write_stage(make(20, 0.02, 1.6, 4));
    CHECK(r.per_mode_mean == doctest::Approx(std::expm1(0.4 * 1.6)));
    CHECK(r.spin_profile.total ==
          doctest::Approx(4 * r.per_mode_mean).epsilon(1e-9));
}
