#include <doctest.h>

#include <cmath>
#include <set>

#include "aet/errors.hpp"
#include "aet/phantoms.hpp"
#include "test_utils.hpp"

using namespace aet;

TEST_SUITE_BEGIN("phantoms");

TEST_CASE("disk phantom values and strict interface rule") {
    const Phantom p = disk_phantom();
    CHECK(p.eval(0.2, 0.2) == 2.0);
    CHECK(p.eval(0.2 + 0.3, 0.2) == 1.0);  // r = 0.3 exactly: outside
    CHECK(p.eval(0.2, -0.1) == 1.0);
    CHECK(p.eval(0.2 + 0.29, 0.2) == 2.0);
    CHECK(p.eval(-0.5, -0.5) == 1.0);
}

TEST_CASE("rotated rectangle phantom") {
    const Phantom p = rotated_rect_phantom();
    // Center of the rectangle: u = v = 0.2 with u = (x+y)/sqrt2, v = (x-y)/sqrt2.
    const double s2 = std::sqrt(2.0);
    const double x = 0.2 * s2, y = 0.0;
    CHECK(p.eval(x, y) == 2.0);
    CHECK(p.eval(0.0, 0.0) == 1.0);   // u = 0: |0 - 0.2| = 0.2, not < 0.2
    CHECK(p.eval(-0.5, -0.5) == 1.0);
}

TEST_CASE("composite phantom regions and precedence") {
    const Phantom p = composite_phantom();
    CHECK(p.eval(0.0, 0.0) == 3.0);          // square
    CHECK(p.eval(-0.25, 0.5) == 2.0);        // first disk
    CHECK(p.eval(0.05, 0.5) == 1.0);         // overlap: later disk wins
    CHECK(p.eval(0.2, 0.5) == 1.0);          // second disk has background value
    CHECK(p.eval(-0.2, -0.5) == 2.0);        // bean ring
    CHECK(p.eval(0.06, -0.5) == 0.5);        // bean hole
    CHECK(p.eval(0.9, 0.0) == 1.0);
}

TEST_CASE("heart-lung phantom matches its frozen geometry file") {
    const Phantom built_in = heart_lung_phantom();
    const Phantom from_file = phantom_from_json_file(std::string(AET_DATA_DIR) + "/heart_lung.json");
    REQUIRE(from_file.primitives.size() == built_in.primitives.size());
    for (double x = -0.95; x <= 0.95; x += 0.05) {
        for (double y = -0.95; y <= 0.95; y += 0.05) {
            if (x * x + y * y > 1.0) continue;
            CHECK(built_in.eval(x, y) == from_file.eval(x, y));
        }
    }
    CHECK(built_in.eval(0.1, 0.5) == 2.0);    // heart
    CHECK(built_in.eval(0.45, -0.1) == 0.5);  // lung
    CHECK(built_in.eval(-0.45, -0.1) == 0.5);
}

TEST_CASE("all paper phantoms take values in the expected set") {
    const std::set<double> allowed{0.5, 1.0, 2.0, 3.0};
    for (const auto& phantom : {disk_phantom(), heart_lung_phantom(), rotated_rect_phantom(),
                                composite_phantom()}) {
        for (double x = -0.99; x <= 0.99; x += 0.021) {
            for (double y = -0.99; y <= 0.99; y += 0.021) {
                if (x * x + y * y > 1.0) continue;
                CHECK(allowed.count(phantom.eval(x, y)) == 1);
            }
        }
    }
}

TEST_CASE("interpolation plus clamping is a no-op for phantom fields") {
    auto space = FunctionSpace::create(testutil::disk(0.05), 1);
    const Phantom p = composite_phantom();
    const ScalarField field = interpolate(space, p.evaluator());
    for (double v : field.coeffs) {
        CHECK(v == std::clamp(v, 0.01, 4.0));
    }
}

TEST_CASE("phantom lookup and aliases") {
    CHECK(phantom_by_name("test1").id == "disk");
    CHECK(phantom_by_name("heart").id == "heart_lung");
    CHECK(phantom_by_name("test3").id == "rotated_rect");
    CHECK(phantom_by_name("composite").id == "composite");
    CHECK_THROWS_AS(phantom_by_name("nope"), InvalidParameterError);
}

TEST_CASE("phantom JSON round trip") {
    const Phantom p = composite_phantom();
    const Phantom q = phantom_from_json_text(phantom_to_json_text(p));
    REQUIRE(q.primitives.size() == p.primitives.size());
    for (double x = -0.9; x <= 0.9; x += 0.037) {
        for (double y = -0.9; y <= 0.9; y += 0.037) {
            if (x * x + y * y > 1.0) continue;
            CHECK(p.eval(x, y) == q.eval(x, y));
        }
    }
    CHECK_THROWS_AS(phantom_from_json_text("{\"primitives\": [{\"kind\": \"blob\", \"value\": 1}]}"),
                    ConfigError);
    CHECK_THROWS_AS(phantom_from_json_text("not json"), ConfigError);
}

TEST_SUITE_END();
