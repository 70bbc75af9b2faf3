#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "affectsim/calibration.hpp"
#include "affectsim/errors.hpp"

using namespace affectsim;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const DomainAssets> movie() {
    static auto assets = load_domain(std::string(AFFECTSIM_DATA_DIR) + "/movie");
    return assets;
}

EmotionProfile movie_profile() {
    return load_profile(std::string(AFFECTSIM_DATA_DIR) + "/profiles/movie.json");
}

constexpr auto ir = static_cast<std::size_t>(Trigger::Irrelevant);
constexpr auto angry = static_cast<std::size_t>(Emotion::Angry);
constexpr auto sad = static_cast<std::size_t>(Emotion::Sad);

// Only IR moves the state: angry by 0.3 and sad by 0.1 per firing, no decay,
// full attention for an open-only personality.
EmotionProfile ir_profile() {
    EmotionProfile p;
    p.m_te[ir][angry] = 0.3;
    p.m_te[ir][sad] = 0.1;
    for (auto& row : p.m_pt) row.fill(0.0);
    p.m_pt[0][ir] = 1.0;
    p.m_pe[0].fill(1.0);
    p.tau = 20;
    return p;
}

AnnotatedSession ir_session(int angry_level, int sad_level) {
    AnnotatedSession s;
    s.session_id = "hand";
    s.domain = "movie";
    s.personality = Personality({1, 0, 0, 0, 0});
    s.goal.inform_slots = {{"moviename", "zootopia"}};
    s.goal.request_slots = {"starttime"};
    s.opening_user_act = UserAction{"inform", {{"moviename", "zootopia"}}, {}};
    for (const char* slot : {"theater", "video_format", "city"}) {
        AnnotatedTurn t;
        t.agent_act = {"request", {}, {slot}};
        t.user_act = {"deny", {}, {}};
        t.levels = {1, 1, 1, 1, 1, 1};
        t.levels[angry] = angry_level;
        t.levels[sad] = sad_level;
        s.turns.push_back(t);
    }
    return s;
}

}  // namespace

TEST_CASE("level mapping") {
    CHECK(level_to_intensity(1) == 0.0);
    CHECK(level_to_intensity(3) == 0.5);
    CHECK(level_to_intensity(5) == 1.0);
    CHECK_THROWS_AS(level_to_intensity(6), ValidationError);
    CHECK_THROWS_AS(level_to_intensity(0), ValidationError);
    for (int l = 1; l <= 5; ++l) CHECK(intensity_to_level(level_to_intensity(l)) == l);
    CHECK(intensity_to_level(0.2) == 2);
    CHECK(levels_for_state(EmotionState{}) == EmotionLevels{1, 1, 1, 1, 1, 1});
}

TEST_CASE("label parsing names the offending field") {
    nlohmann::json j = {{"angry", 1}, {"disgust", 2}, {"fear", 3}, {"happy", 4}, {"sad", 5}, {"surprise", 6}};
    try {
        levels_from_json(j);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "emotion_labels.surprise");
    }
    j["surprise"] = 2;
    CHECK(levels_from_json(j) == EmotionLevels{1, 2, 3, 4, 5, 2});
    j.erase("fear");
    CHECK_THROWS_AS(levels_from_json(j), ValidationError);
}

TEST_CASE("hand-built IR session") {
    const auto session = ir_session(5, 1);
    const auto report = replay_and_diff(session, movie()->schema, ir_profile());
    REQUIRE(report.turns.size() == 3);
    TriggerVector only_ir;
    only_ir.set(Trigger::Irrelevant);
    for (const auto& t : report.turns) CHECK(t.triggers == only_ir);
    CHECK(report.trigger_counts[ir] == 3);

    // state after k turns: angry 0.3k, sad 0.1k -> comparison (0.75, 0.25)
    // -> levels 4 and 2 -> intensities 0.75 and 0.25
    for (const auto& t : report.turns) {
        CHECK(t.simulated_raw[angry] == doctest::Approx(0.75));
        CHECK(t.simulated[angry] == 0.75);
        CHECK(t.simulated[sad] == 0.25);
        CHECK(t.error[angry] == 0.25);
        CHECK(t.error[sad] == -0.25);
    }
    // 3 turns x 2 nonzero errors of 0.25 over 18 cells
    CHECK(report.rmse == doctest::Approx(std::sqrt(6 * 0.0625 / 18)).epsilon(1e-14));
    CHECK(*report.mean_signed_error(Trigger::Irrelevant, Emotion::Angry) == doctest::Approx(0.25));
    CHECK_FALSE(report.mean_signed_error(Trigger::Initiative, Emotion::Angry).has_value());

    // deltas: annotated angry 1.0 then 0, simulated 0.75 then 0
    const auto s = suggest_scaling({report});
    CHECK(*s.factor[ir][angry] == doctest::Approx(1.0 / 0.75));
    CHECK(*s.factor[ir][sad] == 0.0);
    CHECK_FALSE(s.factor[ir][static_cast<std::size_t>(Emotion::Happy)].has_value());
    CHECK_FALSE(s.factor[static_cast<std::size_t>(Trigger::Overlong)][angry].has_value());
}

TEST_CASE("annotated rises at twice the simulated ones suggest 2") {
    // simulated: angry 0 -> 0.75, sad 0 -> 0.25 at turn 1, flat afterwards
    const auto report = replay_and_diff(ir_session(4, 3), movie()->schema, ir_profile());
    const auto s = suggest_scaling({report});
    CHECK(*s.factor[ir][angry] == doctest::Approx(1.0));
    CHECK(*s.factor[ir][sad] == doctest::Approx(2.0));

    // pooling: a second session with matching sad halves the excess
    const auto matching = replay_and_diff(ir_session(4, 2), movie()->schema, ir_profile());
    CHECK(*suggest_scaling({report, matching}).factor[ir][sad] == doctest::Approx(1.5));
}

TEST_CASE("simulated sessions replay with zero error") {
    const auto profile = movie_profile();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        UserSimulator user(movie(), Personality({0.9, 0.2, 0.6, 0.3, 0.8}), profile, 40, seed);
        RuleAgent agent(movie()->schema, movie()->kb);
        const auto session = simulate_session(user, agent, "sim" + std::to_string(seed));
        REQUIRE_FALSE(session.turns.empty());
        const auto report = replay_and_diff(session, movie()->schema, profile);
        CHECK(report.rmse == 0.0);
        const auto s = suggest_scaling({report});
        for (const auto& row : s.factor)
            for (const auto& f : row)
                if (f) CHECK(*f == doctest::Approx(1.0));
    }
}

TEST_CASE("all level 1 against a silent simulator is exact") {
    auto session = ir_session(1, 1);
    EmotionProfile silent = ir_profile();
    silent.m_te[ir].fill(0.0);
    CHECK(replay_and_diff(session, movie()->schema, silent).rmse == 0.0);
}

TEST_CASE("trigger contribution is linear in the m_te scale") {
    const auto profile = movie_profile();
    const Personality p({0.4, 0.7, 0.2, 0.9, 0.5});
    Rng rng(6);
    for (int n = 0; n < 50; ++n) {
        TriggerVector t;
        for (auto& f : t.flags) f = rng.uniform() < 0.5;
        const double k = 0.1 + rng.uniform() * 2;
        auto scaled = profile;
        for (auto& row : scaled.m_te)
            for (auto& x : row) x *= k;
        const auto a = variation_unclamped(p, t, profile), b = variation_unclamped(p, t, scaled);
        for (std::size_t e = 0; e < kNumEmotions; ++e) CHECK(b[e] == doctest::Approx(k * a[e]).epsilon(1e-12));
    }
}

TEST_CASE("session files round trip") {
    auto session = ir_session(3, 2);
    session.volunteer = "v7";
    session.sequence_index = 4;
    session.status = "success";
    session.turns[1].user_text = "no thanks, \"quoted\"";
    const auto path = fs::temp_directory_path() / "affectsim_session_test.jsonl";
    write_session_file(session, path);
    const auto back = read_session_file(path);
    CHECK(back.session_id == session.session_id);
    CHECK(back.volunteer == "v7");
    CHECK(back.sequence_index == 4);
    CHECK(back.goal == session.goal);
    CHECK(back.opening_user_act == session.opening_user_act);
    REQUIRE(back.turns.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.turns[i].agent_act == session.turns[i].agent_act);
        CHECK(back.turns[i].levels == session.turns[i].levels);
        CHECK(back.turns[i].user_text == session.turns[i].user_text);
    }
    CHECK(session_jsonl(back) == session_jsonl(session));
    fs::remove(path);
    CHECK_THROWS(read_session_file(path));
}

TEST_CASE("validation lists every offending turn") {
    auto session = ir_session(1, 1);
    session.turns[0].agent_act.intent = "sing";
    session.turns[2].agent_act.request_slots = {"no_such_slot"};
    try {
        validate_session(session, movie()->schema);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("turn 1") != std::string::npos);
        CHECK(what.find("turn 3") != std::string::npos);
        CHECK(what.find("turn 2") == std::string::npos);
        CHECK(e.field() == "turns");
    }
}
