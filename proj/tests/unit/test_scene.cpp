#include <doctest.h>

#include <random>

#include "firesight/scene.hpp"
#include "support.hpp"

using namespace firesight;

namespace {

Track confirmed(ClassLabel l, double c, std::uint64_t id = 1) { return fst::make_track(id, l, {0, 0, 4, 4}, c); }

}  // namespace

TEST_CASE("priority examples") {
    const PriorityWeights w;
    CHECK(priority_score({}, w) == 0.0);
    CHECK(priority_score({confirmed(ClassLabel::Fire, 1.0)}, w) == 5.0);
    CHECK(priority_score({confirmed(ClassLabel::PronePerson, 0.9), confirmed(ClassLabel::Door, 0.8, 2)}, w) ==
          doctest::Approx(8.0).epsilon(1e-12));
    auto t = confirmed(ClassLabel::Fire, 1.0);
    t.state = TrackState::Tentative;
    CHECK(priority_score({t}, w) == 0.0);
    t.state = TrackState::Lost;
    CHECK(priority_score({t}, w) == 0.0);
}

TEST_CASE("weight table") {
    const PriorityWeights w;
    CHECK(w[ClassLabel::PronePerson] == 8);
    CHECK(w[ClassLabel::Fire] == 5);
    CHECK(w[ClassLabel::Civilian] == 4);
    for (auto l : {ClassLabel::Firefighter, ClassLabel::Door, ClassLabel::Window, ClassLabel::Ladder}) CHECK(w[l] == 1);

    const auto custom = PriorityWeights::from_json(nlohmann::json{{"fire", 2.5}});
    CHECK(custom[ClassLabel::Fire] == 2.5);
    CHECK(custom[ClassLabel::PronePerson] == 8);
    CHECK_THROWS_AS(PriorityWeights::from_json(nlohmann::json{{"dragon", 1}}), Error);
    CHECK_THROWS_AS(PriorityWeights::from_json(nlohmann::json{{"fire", -1}}), Error);
    CHECK_THROWS_AS(PriorityWeights::from_json(nlohmann::json::array()), Error);
}

TEST_CASE("priority properties") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> conf(0, 1);
    const PriorityWeights w;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Track> tracks;
        for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i) {
            tracks.push_back(fst::make_track(i + 1, kAllClasses[rng() % kClassCount], {0, 0, 2, 2}, conf(rng),
                                             static_cast<TrackState>(rng() % 3)));
        }
        const double base = priority_score(tracks, w);
        CHECK(base >= 0);
        auto more = tracks;
        more.push_back(confirmed(kAllClasses[rng() % kClassCount], conf(rng), 99));
        REQUIRE(priority_score(more, w) >= base);

        // scaling all weights by s scales the score by s
        PriorityWeights scaled = w;
        for (auto& x : scaled.weight) x *= 3.0;
        REQUIRE(priority_score(tracks, scaled) == doctest::Approx(3.0 * base));

        // order independence of describe
        auto shuffled = tracks;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        REQUIRE(describe(shuffled) == describe(tracks));
    }
}

TEST_CASE("describe examples") {
    CHECK(describe({}) == "No objects detected.");
    CHECK(describe({confirmed(ClassLabel::Door, 0.9, 3), confirmed(ClassLabel::Firefighter, 0.9, 1),
                    confirmed(ClassLabel::Firefighter, 0.8, 2)}) == "2 firefighters, 1 door detected.");
    CHECK(describe({confirmed(ClassLabel::PronePerson, 0.5)}) == "1 prone person detected.");
    CHECK(describe({confirmed(ClassLabel::PronePerson, 0.5), confirmed(ClassLabel::PronePerson, 0.5, 2)}) ==
          "2 prone people detected.");
    auto t = confirmed(ClassLabel::Fire, 1);
    t.state = TrackState::Tentative;
    CHECK(describe({t}) == "No objects detected.");
}
