#pragma once

// Rule-based detectors for the five dialogue trigger events.

#include <set>
#include <string>

#include "affectsim/domain.hpp"
#include "affectsim/emotion.hpp"

namespace affectsim {

struct TurnContext {
    int turn_index = 0;
    AgentAction agent_action;
    UserGoal user_goal;
    std::set<std::string> informed_slots;         // slots the user has supplied so far
    std::multiset<std::string> requested_history;  // slots the agent asked for on earlier turns
    std::set<std::string> user_requested;          // slots the user has asked for so far
    int tau = 20;
};

enum class Relevance { Irrelevant, Relevant, None };

bool detect_overlong(const TurnContext& ctx);
Relevance detect_relevance(const TurnContext& ctx);
bool detect_repeated_query(const TurnContext& ctx);
bool detect_initiative(const TurnContext& ctx);
TriggerVector detect_all(const TurnContext& ctx);

void to_json(nlohmann::json& j, const TurnContext& ctx);
void from_json(const nlohmann::json& j, TurnContext& ctx);
void to_json(nlohmann::json& j, const TriggerVector& t);
void from_json(const nlohmann::json& j, TriggerVector& t);

}  // namespace affectsim
