#include "doctest.h"

#include "affectsim/agent.hpp"
#include "affectsim/errors.hpp"
#include "affectsim/experiment.hpp"
#include "affectsim/user_simulator.hpp"

using namespace affectsim;

namespace {

std::shared_ptr<const DomainAssets> movie() {
    static auto assets = load_domain(std::string(AFFECTSIM_DATA_DIR) + "/movie");
    return assets;
}

EmotionProfile profile() {
    static auto p = load_profile(std::string(AFFECTSIM_DATA_DIR) + "/profiles/movie.json");
    return p;
}

const Personality kUA({0.7, 0.6, 0.8, 0.7, 0.3});
const Personality kUB({0.4, 0.5, 0.3, 0.5, 0.8});

// A satisfiable goal built from one KB record.
UserGoal goal_from_record(std::size_t index) {
    const auto& r = movie()->kb.records()[index];
    UserGoal g;
    for (const auto* s : {"moviename", "date", "city"}) g.inform_slots[s] = r.value(s);
    g.request_slots = {"ticket", "theater", "starttime"};
    return g;
}

// Values of the first KB record that matches the goal constraints.
std::map<std::string, std::string> answer_record(const UserGoal& g) {
    return movie()->kb.records()[movie()->kb.lookup_indices(g.inform_slots).front()].as_map();
}

}  // namespace

TEST_CASE("opening act is seeded and never terminating") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        UserSimulator a(movie(), kUA, profile(), 40, seed), b(movie(), kUA, profile(), 40, seed);
        const auto x = a.reset();
        CHECK(x == b.reset());
        CHECK((x.intent == "inform" || x.intent == "request" || x.intent == "greeting"));
        CHECK(x.intent != "terminating");
        CHECK_NOTHROW(validate_act(x, movie()->schema));
        CHECK(a.state().emotion.intensity == EmotionVector{});
    }
}

TEST_CASE("requested constraint is informed") {
    UserSimulator user(movie(), kUA, profile(), 40, 3);
    const auto g = goal_from_record(10);
    user.reset(g);
    const auto r = user.step({"request", {}, {"date"}});
    CHECK(r.user_action.intent == "inform");
    CHECK(r.user_action.inform_slots == std::map<std::string, std::string>{{"date", g.inform_slots.at("date")}});
    CHECK(r.status == DialogueStatus::Ongoing);
}

TEST_CASE("informing the last request slot consistently succeeds") {
    UserSimulator user(movie(), kUA, profile(), 40, 3);
    const auto g = goal_from_record(42);
    user.reset(g);
    const auto rec = answer_record(g);
    user.step({"inform", {{"ticket", rec.at("ticket")}}, {}});
    user.step({"inform", {{"theater", rec.at("theater")}}, {}});
    const auto r = user.step({"inform", {{"starttime", rec.at("starttime")}}, {}});
    CHECK(r.user_action.intent == "thanks");
    CHECK(r.status == DialogueStatus::Success);
    CHECK(dialogue_success(user.state()));
    CHECK_THROWS_AS(user.step({"greeting", {}, {}}), UsageError);
}

TEST_CASE("inconsistent values and wrong constraints are denied") {
    UserSimulator user(movie(), kUA, profile(), 40, 3);
    const auto g = goal_from_record(7);
    user.reset(g);
    // a theater value that matches no record together with the constraints
    std::string bad;
    for (const auto& v : movie()->schema.vocabulary.at("theater")) {
        auto c = g.inform_slots;
        c["theater"] = v;
        if (movie()->kb.count_matches(c) == 0) {
            bad = v;
            break;
        }
    }
    REQUIRE_FALSE(bad.empty());
    auto r = user.step({"inform", {{"theater", bad}}, {}});
    CHECK(r.user_action.intent == "deny");
    CHECK(r.user_action.request_slots == std::set<std::string>{"theater"});
    CHECK(user.state().obtained_slots.count("theater") == 0);

    std::string wrong_city = g.inform_slots.at("city") == "seattle" ? "boston" : "seattle";
    r = user.step({"inform", {{"city", wrong_city}}, {}});
    CHECK(r.user_action.intent == "deny");
    CHECK(r.user_action.inform_slots.at("city") == g.inform_slots.at("city"));
}

TEST_CASE("irrelevant act is answered by reasserting a constraint") {
    UserSimulator user(movie(), kUA, profile(), 40, 3);
    const auto g = goal_from_record(3);
    user.reset(g);
    const auto r = user.step({"request", {}, {"theaterchain"}});
    CHECK(r.triggers[Trigger::Irrelevant]);
    CHECK(r.user_action.intent == "inform");
    REQUIRE(r.user_action.inform_slots.size() == 1);
    CHECK(g.inform_slots.count(r.user_action.inform_slots.begin()->first) == 1);
}

TEST_CASE("rigged profile terminates on one irrelevant event") {
    EmotionProfile p{};
    p.m_te[static_cast<std::size_t>(Trigger::Irrelevant)][static_cast<std::size_t>(Emotion::Angry)] = 1.0;
    for (auto& row : p.m_pt) row.fill(1.0);
    for (auto& row : p.m_pe) row.fill(1.0);
    p.p_term = 1.0;
    p.tau = 20;

    // oracle: one IR step from zero emotion
    TriggerVector ir;
    ir.set(Trigger::Irrelevant);
    const auto e = update_state(EmotionState{}, kUA, variation(kUA, ir, p), p);
    REQUIRE(negative_mass(e) > 0.5);

    UserSimulator user(movie(), kUA, p, 40, 1);
    user.reset(goal_from_record(0));
    const auto r = user.step({"request", {}, {"theaterchain"}});
    CHECK(r.user_action.intent == "terminating");
    CHECK(r.status == DialogueStatus::Terminated);
    CHECK_FALSE(dialogue_success(user.state()));
}

TEST_CASE("max turns exhausted is a failure") {
    UserSimulator user(movie(), kUA, profile(), 5, 1);
    GreetingAgent agent(movie()->schema);
    const auto out = run_dialogue(agent, user);
    CHECK(out.status == DialogueStatus::Failure);
    CHECK(out.turns == 5);
    CHECK_FALSE(dialogue_success(user.state()));
}

TEST_CASE("success requires a terminal state") {
    UserSimulator user(movie(), kUA, profile(), 40, 1);
    user.reset();
    CHECK_THROWS_AS(dialogue_success(user.state()), UsageError);
}

TEST_CASE("personality does not change trajectories at p_term 0") {
    auto p = profile();
    p.p_term = 0.0;
    UserSimulator a(movie(), kUA, p, 40, 11), b(movie(), kUB, p, 40, 11);
    RuleAgent ra(movie()->schema, movie()->kb), rb(movie()->schema, movie()->kb);
    bool emotion_differs = false;
    for (int d = 0; d < 30; ++d) {
        const auto x = run_dialogue(ra, a), y = run_dialogue(rb, b);
        CHECK(x.user_acts == y.user_acts);
        CHECK(x.agent_acts == y.agent_acts);
        CHECK(x.status == y.status);
        CHECK(x.turns == y.turns);
        emotion_differs = emotion_differs || x.normalized != y.normalized;
    }
    CHECK(emotion_differs);
}

TEST_CASE("p_term 0 never terminates and every act validates") {
    auto p = profile();
    p.p_term = 0.0;
    UserSimulator user(movie(), kUB, p, 40, 2);
    GreetingAgent greet(movie()->schema);
    RuleAgent rule(movie()->schema, movie()->kb);
    for (int d = 0; d < 40; ++d) {
        DialogueAgent& agent = d % 2 ? static_cast<DialogueAgent&>(greet) : rule;
        const auto out = run_dialogue(agent, user);
        CHECK(out.status != DialogueStatus::Terminated);
        for (const auto& act : out.user_acts) {
            CHECK(act.intent != "terminating");
            CHECK_NOTHROW(validate_act(act, movie()->schema));
        }
    }
}

TEST_CASE("trace record layout") {
    UserSimulator user(movie(), kUA, profile(), 40, 1);
    user.reset(goal_from_record(0));
    const AgentAction act{"greeting", {}, {}};
    const auto r = user.step(act);
    const auto j = trace_record(1, act, r);
    for (const auto* key : {"turn", "agent_act", "user_act", "triggers", "emotion", "status"}) CHECK(j.contains(key));
    CHECK(j["status"] == "ongoing");
}
