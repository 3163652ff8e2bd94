#include "oracle.hpp"

#include "tlsloss/error.hpp"
#include "tlsloss/error_analysis.hpp"

#include <catch_amalgamated.hpp>

using namespace tlsloss;
using namespace tlsloss::error_analysis;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("sigma_err point values") {
    CHECK(sigma_err(1e-3, 1e-3, 0.102) == 0.0);
    CHECK(sigma_err(3.7e-6, 3.7e-6, 0.9) == 0.0);

    const double s = sigma_err(1e-6, 1.12e-5, 0.102);
    CHECK_THAT(s, WithinRel(double(oracle::sigma_err(1e-6L, 1.12e-5L, 0.102L)), 1e-14));
    // 0.102 * 1.02e-5 / (0.898e-6 + 1.1424e-6)
    CHECK_THAT(s, WithinAbs(0.50990, 1e-5));
    CHECK(s > 0.0);

    const auto pt = evaluate(1e-3, 1.12e-5, 0.102);
    CHECK(pt.magnitude() == std::abs(pt.sigma_err));
    CHECK(pt.sigma_err < 0.0);
    CHECK_THAT(pt.magnitude(), WithinAbs(0.112, 0.001));
}

TEST_CASE("high capacitor loss asymptote") {
    CHECK_THAT(high_capacitor_loss_asymptote(0.102), WithinRel(0.102 / 0.898, 1e-15));
    CHECK_THAT(high_capacitor_loss_asymptote(0.102), WithinAbs(0.1136, 1e-4));
    CHECK_THAT(std::abs(sigma_err(1e-1, 1.12e-5, 0.102)), WithinAbs(0.1136, 1e-4));
    CHECK_THAT(std::abs(sigma_err(1e3, 1e-9, 0.3)), WithinRel(0.3 / 0.7, 1e-9));
}

TEST_CASE("measurable regime") {
    CHECK(measurable_regime(1e-3, 1.12e-5, 0.102, 0.12));
    CHECK_FALSE(measurable_regime(1e-3, 1.12e-5, 0.102, 0.10));
    CHECK(measurable_regime(2e-5, 2e-5, 0.5, 1e-12));
    CHECK_FALSE(measurable_regime(1e-6, 1.12e-5, 0.102));
}

TEST_CASE("measurable interval bounds") {
    const auto in = measurable_interval(1.12e-5, 0.102, 0.1);
    CHECK(std::isinf(in.upper) == false);
    CHECK_THAT(std::abs(sigma_err(in.lower, 1.12e-5, 0.102)), WithinAbs(0.1, 1e-12));
    CHECK_THAT(std::abs(sigma_err(in.upper, 1.12e-5, 0.102)), WithinAbs(0.1, 1e-12));
    CHECK(measurable_regime(std::sqrt(in.lower * in.upper), 1.12e-5, 0.102));
    CHECK_FALSE(measurable_regime(in.lower * 0.99, 1.12e-5, 0.102));
    CHECK_FALSE(measurable_regime(in.upper * 1.01, 1.12e-5, 0.102));

    // Asymptote 0.01/0.99 is below 0.1, so any large capacitor loss works.
    const auto open = measurable_interval(1.12e-5, 0.01, 0.1);
    CHECK(std::isinf(open.upper));
    CHECK_THAT(std::abs(sigma_err(open.lower, 1.12e-5, 0.01)), WithinAbs(0.1, 1e-12));
}

TEST_CASE("inductor-loss family map") {
    const ErrorMap map = error_map(inductor_loss_preset());
    REQUIRE(map.points.size() == map.spec.curve_values.size());
    CHECK(map.capacitor_losses.front() == 1e-8);
    CHECK_THAT(map.capacitor_losses.back(), WithinRel(1e-1, 1e-15));
    for (std::size_t c = 0; c < map.points.size(); ++c) {
        REQUIRE(map.points[c].size() == map.capacitor_losses.size());
        const auto& last = map.points[c].back();
        CHECK(last.inductor_participation == 0.102);
        CHECK(last.inductor_loss == map.spec.curve_values[c]);
        CHECK(std::abs(last.magnitude() - high_capacitor_loss_asymptote(0.102)) < 1e-3);
        for (std::size_t k = 0; k < map.capacitor_losses.size(); ++k) {
            const auto& p = map.points[c][k];
            CHECK(p.sigma_err == sigma_err(p.capacitor_loss, p.inductor_loss, p.inductor_participation));
        }
    }
}

TEST_CASE("participation family map") {
    ErrorMapSpec spec = participation_preset();
    spec.curve_values = {0.01};
    spec.grid = {1e-8, 1e-1, 141};
    const ErrorMap map = error_map(spec);
    bool saw_zero = false, saw_large = false;
    for (const auto& p : map.points[0]) {
        CHECK(p.inductor_loss == 1.12e-5);
        if (p.capacitor_loss == 1.12e-5) saw_zero = p.sigma_err == 0.0;
        if (p.capacitor_loss < 1e-7 && p.magnitude() > 0.1) saw_large = true;
    }
    CHECK(saw_large);
    CHECK(sigma_err(1.12e-5, 1.12e-5, 0.01) == 0.0);
    (void)saw_zero;
}

TEST_CASE("grid validation") {
    ErrorMapSpec single = inductor_loss_preset();
    single.curve_values = {1.12e-5};
    single.grid = {1.12e-5, 1.12e-5, 1};
    const ErrorMap one = error_map(single);
    REQUIRE(one.capacitor_losses.size() == 1);
    CHECK(one.points[0][0].sigma_err == 0.0);

    auto range_error = [](LogGrid g) {
        try {
            (void)g.values();
        } catch (const Error& e) {
            return e.kind() == ErrorKind::Range;
        }
        return false;
    };
    CHECK(range_error({-1.0, 1e-1, 10}));
    CHECK(range_error({1e-1, 1e-3, 10}));
    CHECK(range_error({1e-3, 1e-1, 0}));
    CHECK(range_error({1e-3, 1e-1, 1}));
    CHECK(range_error({0.0, 1e-1, 10}));
}
