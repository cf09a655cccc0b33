#include <doctest.h>

#include <cmath>

#include "qmem/config.hpp"

using namespace qmem;

TEST_CASE("collective rate is the product of depth and single-atom rate") {
    ExperimentConfig c;
    c.optical_depth = 20.0;
    c.single_atom_rate = 0.05;
    const ValidatedConfig v = validate(c);
    CHECK(v.collective_rate() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.reference_group_velocity() == 1.0);
}

TEST_CASE("bound violations name the offending field") {
    ExperimentConfig c;
    c.stokes_efficiency = 1.2;
    try {
        validate(c);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("stokes_efficiency") !=
              std::string::npos);
    }
}

TEST_CASE("every violated bound is reported at once") {
    ExperimentConfig c;
    c.stokes_efficiency = -0.5;
    c.antistokes_background = -1.0;
    c.mode_count = 0;
    try {
        validate(c);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.problems().size() == 3);
    }
}

TEST_CASE("NaN and infinity are rejected") {
    ExperimentConfig c;
    c.delay = std::nan("");
    CHECK_THROWS_AS(validate(c), ValidationError);
    c.delay = 0.0;
    c.optical_depth = INFINITY;
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("paper-like configuration is accepted") {
    ExperimentConfig c;
    c.optical_depth = 20.0;
    c.mode_count = 4;
    c.decoherence_rate = 1.0 / 3.0;
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("cell length other than 1 is rejected") {
    ExperimentConfig c;
    c.cell_length = 2.0;
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("validate is idempotent") {
    ExperimentConfig c;
    c.single_atom_rate = 0.013;
    const ValidatedConfig once = validate(c);
    const ValidatedConfig twice = validate(once.raw());
    CHECK(once.raw() == twice.raw());
    CHECK(once.collective_rate() == twice.collective_rate());
}

TEST_CASE("every field survives a JSON round trip") {
    ExperimentConfig c;
    c.optical_depth = 17.5;
    c.single_atom_rate = 0.031;
    c.write_duration = 2.2;
    c.mode_count = 7;
    c.decoherence_rate = 0.21;
    c.delay = 1.5;
    c.retrieve_coupling = 0.77;
    c.cell_length = 1.0;
    c.stokes_efficiency = 0.41;
    c.antistokes_efficiency = 0.63;
    c.stokes_background = 0.09;
    c.antistokes_background = 0.11;
    c.dead_time = 0.05;
    c.rng_seed = 987654321;
    const ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(back == c);
}

TEST_CASE("unknown config keys are a hard error") {
    CHECK_THROWS_AS(config_from_json("{\"optical_dept\": 20}"),
                    ValidationError);
    CHECK_THROWS_AS(config_from_json("{\"optical_depth\": 20, \"extra\": 1}"),
                    ValidationError);
}

TEST_CASE("missing keys take defaults") {
    const ExperimentConfig c = config_from_json("{\"mode_count\": 2}");
    CHECK(c.mode_count == 2);
    CHECK(c.optical_depth == ExperimentConfig{}.optical_depth);
}
