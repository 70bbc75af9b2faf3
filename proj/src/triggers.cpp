#include "affectsim/triggers.hpp"

#include <cassert>

#include "affectsim/errors.hpp"

namespace affectsim {

bool detect_overlong(const TurnContext& ctx) { return ctx.turn_index > ctx.tau; }

Relevance detect_relevance(const TurnContext& ctx) {
    bool any_slot = false;
    for (const auto& slot : ctx.agent_action.mentioned_slots()) {
        if (slot == kTaskCompleteSlot) continue;
        any_slot = true;
        if (ctx.user_goal.inform_slots.count(slot) || ctx.user_goal.request_slots.count(slot)) {
            return Relevance::Relevant;
        }
    }
    return any_slot ? Relevance::Irrelevant : Relevance::None;
}

bool detect_repeated_query(const TurnContext& ctx) {
    if (ctx.agent_action.intent != intent::kRequest) return false;
    for (const auto& slot : ctx.agent_action.request_slots) {
        if (ctx.informed_slots.count(slot)) return true;
    }
    return false;
}

bool detect_initiative(const TurnContext& ctx) {
    if (ctx.agent_action.intent != intent::kInform) return false;
    for (const auto& [slot, value] : ctx.agent_action.inform_slots) {
        if (ctx.user_goal.request_slots.count(slot) && !ctx.user_requested.count(slot)) return true;
    }
    return false;
}

TriggerVector detect_all(const TurnContext& ctx) {
    TriggerVector t;
    t.set(Trigger::Overlong, detect_overlong(ctx));
    const auto rel = detect_relevance(ctx);
    t.set(Trigger::Irrelevant, rel == Relevance::Irrelevant);
    t.set(Trigger::Relevant, rel == Relevance::Relevant);
    t.set(Trigger::RepeatedQuery, detect_repeated_query(ctx));
    t.set(Trigger::Initiative, detect_initiative(ctx));
    assert(!(t[Trigger::Irrelevant] && t[Trigger::Relevant]));
    return t;
}

void to_json(nlohmann::json& j, const TurnContext& ctx) {
    j = nlohmann::json{{"turn_index", ctx.turn_index},
                       {"agent_action", ctx.agent_action},
                       {"user_goal", ctx.user_goal},
                       {"informed_slots", ctx.informed_slots},
                       {"requested_history", ctx.requested_history},
                       {"user_requested", ctx.user_requested},
                       {"tau", ctx.tau}};
}

void from_json(const nlohmann::json& j, TurnContext& ctx) {
    ctx.turn_index = j.at("turn_index").get<int>();
    ctx.agent_action = j.at("agent_action").get<DialogueAct>();
    ctx.user_goal = j.at("user_goal").get<UserGoal>();
    ctx.informed_slots = j.value("informed_slots", std::set<std::string>{});
    ctx.requested_history = j.value("requested_history", std::multiset<std::string>{});
    ctx.user_requested = j.value("user_requested", std::set<std::string>{});
    ctx.tau = j.value("tau", 20);
    if (ctx.turn_index < 0) throw ValidationError("turn_index must be non-negative", "turn_index");
    if (ctx.tau < 1) throw ValidationError("tau must be at least 1", "tau");
}

void to_json(nlohmann::json& j, const TriggerVector& t) {
    j = nlohmann::json::object();
    for (std::size_t i = 0; i < kNumTriggers; ++i) j[std::string(kTriggerNames[i])] = t.flags[i] ? 1 : 0;
}

void from_json(const nlohmann::json& j, TriggerVector& t) {
    for (std::size_t i = 0; i < kNumTriggers; ++i) {
        t.flags[i] = j.at(std::string(kTriggerNames[i])).get<int>() != 0;
    }
}

}  // namespace affectsim
