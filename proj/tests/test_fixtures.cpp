#include "doctest.h"
#include "fixture_util.hpp"

TEST_CASE("step fixtures") {
    auto fs = fixtures::files(FIXTURE_DIR "/steps");
    CHECK(fs.size() >= 40);
    for (auto& f : fs) {
        auto r = fixtures::check_step_fixture(f);
        CHECK_MESSAGE(r.ok, f.filename().string() << ": " << r.message);
    }
}

TEST_CASE("typing fixtures") {
    auto fs = fixtures::files(FIXTURE_DIR "/typing");
    CHECK(fs.size() >= 40);
    for (auto& f : fs) {
        auto r = fixtures::check_typing_fixture(f);
        CHECK_MESSAGE(r.ok, f.filename().string() << ": " << r.message);
    }
}
