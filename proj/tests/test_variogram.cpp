#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "core/raster_io.hpp"
#include "core/variogram.hpp"
#include "test_support.hpp"

using namespace krigrid;

namespace {

VariogramModel model(VariogramKind kind, double sill, double range, double nugget,
                     double exponent = 1.0, double slope = 0.0) {
    VariogramModel m;
    m.kind = kind;
    m.sill = sill;
    m.range = range;
    m.nugget = nugget;
    m.exponent = exponent;
    m.slope = slope;
    return m;
}

} // namespace

TEST_CASE("closed-form semivariances at hand-checked lags") {
    const double e1 = 1.0 - std::exp(-1.0);

    auto expo = model(VariogramKind::exponential, 2.0, 10.0, 0.5);
    CHECK(semivariance(expo, 10.0) == doctest::Approx(0.5 + 2.0 * e1).epsilon(1e-12));

    auto sph = model(VariogramKind::spherical, 1.0, 8.0, 0.25);
    CHECK(semivariance(sph, 4.0) == doctest::Approx(0.25 + 0.6875).epsilon(1e-12));
    CHECK(semivariance(sph, 8.0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(semivariance(sph, 80.0) == 1.25); // flat beyond the range

    auto gauss = model(VariogramKind::gaussian, 3.0, 6.0, 0.0);
    CHECK(semivariance(gauss, 6.0) == doctest::Approx(3.0 * e1).epsilon(1e-12));

    auto lin = model(VariogramKind::linear, 0.0, 1.0, 0.1, 1.0, 0.05);
    CHECK(semivariance(lin, 7.0) == doctest::Approx(0.1 + 0.35).epsilon(1e-12));

    auto pow = model(VariogramKind::power, 0.2, 1.0, 0.0, 1.5);
    CHECK(semivariance(pow, 4.0) == doctest::Approx(0.2 * 8.0).epsilon(1e-12));

    auto hole = model(VariogramKind::hole_effect, 1.0, 5.0, 0.3);
    // at lag == range the sine term vanishes: nugget + sill
    CHECK(semivariance(hole, 5.0) == doctest::Approx(1.3).epsilon(1e-12));
    // the hole effect overshoots the sill where sin(t) < 0
    CHECK(semivariance(hole, 7.5) > 1.3);
}

TEST_CASE("semivariance is zero at lag zero for every kind") {
    for (auto kind : {VariogramKind::exponential, VariogramKind::spherical,
                      VariogramKind::gaussian, VariogramKind::linear, VariogramKind::power,
                      VariogramKind::hole_effect}) {
        auto m = model(kind, 1.0, 5.0, 0.4, 1.2, 0.3);
        CHECK(semivariance(m, 0.0) == 0.0);
    }
    CHECK_THROWS_AS(semivariance(model(VariogramKind::exponential, 1, 5, 0), -1.0), Error);
}

TEST_CASE("empirical variogram bins hand-computed pairs and keeps empty bins") {
    // Three collinear points: pair distances 3, 4, 7 with value gaps 1, 2, 3.
    std::vector<SamplePoint> pts = {{0, 0, 0.0}, {3, 0, 1.0}, {7, 0, 3.0}};
    auto bins = empirical_variogram(pts, 7); // bin width = 1
    REQUIRE(bins.size() == 7);
    // semivariance contribution is dv^2 / 2 averaged per bin
    CHECK(bins[3].pair_count == 1);
    CHECK(bins[3].semivariance == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bins[4].pair_count == 1);
    CHECK(bins[4].semivariance == doctest::Approx(2.0).epsilon(1e-12));
    // the maximum-distance pair lands in the last bin, not one past it
    CHECK(bins[6].pair_count == 1);
    CHECK(bins[6].semivariance == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(bins[0].pair_count == 0);
    CHECK(bins[0].semivariance == 0.0);
    // lag centres are evenly spaced over (0, max distance]
    CHECK(bins[0].lag_centre == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bins[6].lag_centre == doctest::Approx(6.5).epsilon(1e-12));

    std::vector<SamplePoint> one = {{0, 0, 0.0}};
    CHECK_THROWS_AS(empirical_variogram(one, 5), Error);
}

TEST_CASE("fit recovers a curve that tracks the empirical variogram") {
    // Values generated with strong spatial structure; the fit should not be
    // degenerate and must beat a flat (pure nugget) model on its own data.
    auto raster = testsupport::blob_raster(64, 64, 31, 0.45);
    auto samples = sample_uniform(raster, 220, 7, 4);
    for (auto kind : {VariogramKind::exponential, VariogramKind::spherical,
                      VariogramKind::gaussian}) {
        VariogramFit fit = fit_variogram(samples, kind);
        CHECK_FALSE(fit.degenerate);
        CHECK(fit.model.kind == kind);
        CHECK(fit.model.sill > 0.0);
        CHECK(fit.model.range > 0.0);
        CHECK(fit.model.nugget >= 0.0);
        CHECK(std::isfinite(fit.objective));

        // weighted SSE of the fitted curve <= weighted SSE of the best flat model
        auto bins = empirical_variogram(samples, 24);
        double wsum = 0.0, mean_num = 0.0;
        for (const auto& bin : bins) {
            wsum += bin.pair_count;
            mean_num += bin.pair_count * bin.semivariance;
        }
        double flat = mean_num / wsum;
        double sse_fit = 0.0, sse_flat = 0.0;
        for (const auto& bin : bins) {
            if (bin.pair_count == 0)
                continue;
            double g = semivariance(fit.model, bin.lag_centre);
            sse_fit += bin.pair_count * (g - bin.semivariance) * (g - bin.semivariance);
            sse_flat += bin.pair_count * (flat - bin.semivariance) * (flat - bin.semivariance);
        }
        CHECK(sse_fit <= sse_flat + 1e-12);
    }
}

TEST_CASE("constant samples give a flagged degenerate fit with zeroed structure") {
    std::vector<SamplePoint> pts;
    testsupport::TempDir tmp("krigrid_vg");
    krigrid::Xoshiro256pp rng(12);
    for (int i = 0; i < 30; ++i)
        pts.push_back({rng.next_double() * 50, rng.next_double() * 50, 0.25});
    VariogramFit fit = fit_variogram(pts, VariogramKind::exponential);
    CHECK(fit.degenerate);
    CHECK(fit.model.sill == 0.0);
    CHECK(fit.model.nugget == 0.0);
}

TEST_CASE("text form round-trips and tolerates appended keys") {
    VariogramFit fit;
    fit.model = model(VariogramKind::power, 0.125, 2.0, 0.0625, 1.25);
    fit.degenerate = false;
    std::string text = variogram_to_text(fit);
    VariogramFit back = variogram_from_text(text);
    CHECK(back.model.kind == fit.model.kind);
    CHECK(back.model.sill == fit.model.sill);
    CHECK(back.model.range == fit.model.range);
    CHECK(back.model.nugget == fit.model.nugget);
    CHECK(back.model.exponent == fit.model.exponent);
    CHECK(back.degenerate == fit.degenerate);

    // Cross-validation stats appended after the model block must not break parsing.
    VariogramFit again = variogram_from_text(text + "q1 = 0.01\nq2 = 1.02\ncr = 0.003\n");
    CHECK(again.model.sill == fit.model.sill);

    CHECK_THROWS_AS(variogram_from_text("sill = 1\n"), Error); // kind is mandatory
    // absent numeric keys fall back to harmless defaults
    VariogramFit sparse = variogram_from_text("kind = exponential\n");
    CHECK(sparse.model.sill == 0.0);
    CHECK(sparse.model.range == 1.0);
}

TEST_CASE("kind names round-trip") {
    for (auto kind : {VariogramKind::exponential, VariogramKind::spherical,
                      VariogramKind::gaussian, VariogramKind::linear, VariogramKind::power,
                      VariogramKind::hole_effect})
        CHECK(variogram_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(variogram_kind_from_string("cubic"), Error);
}
