#include "affectsim/user_simulator.hpp"

#include <algorithm>

#include "affectsim/errors.hpp"

namespace affectsim {

namespace {
constexpr std::uint64_t kTaskStream = 1;
constexpr std::uint64_t kTerminationStream = 2;
}  // namespace

const char* to_string(DialogueStatus s) {
    switch (s) {
        case DialogueStatus::Ongoing: return "ongoing";
        case DialogueStatus::Success: return "success";
        case DialogueStatus::Failure: return "failure";
        case DialogueStatus::Terminated: return "terminated";
    }
    return "ongoing";
}

DialogueStatus status_from_string(const std::string& s) {
    if (s == "ongoing") return DialogueStatus::Ongoing;
    if (s == "success") return DialogueStatus::Success;
    if (s == "failure") return DialogueStatus::Failure;
    if (s == "terminated") return DialogueStatus::Terminated;
    throw ValidationError("unknown dialogue status '" + s + "'", "status");
}

UserSimulator::UserSimulator(std::shared_ptr<const DomainAssets> assets, Personality personality,
                             EmotionProfile profile, int max_turns, std::uint64_t seed)
    : assets_(std::move(assets)),
      personality_(personality),
      profile_(profile),
      max_turns_(max_turns),
      task_rng_(Rng::derive(seed, kTaskStream)),
      term_rng_(Rng::derive(seed, kTerminationStream)) {
    if (!assets_) throw ConfigError("user simulator requires domain assets");
    if (max_turns_ < 1) throw ConfigError("max_turns must be positive");
    profile_.validate();
    state_.status = DialogueStatus::Failure;  // nothing to step until reset
}

void UserSimulator::set_profile(const EmotionProfile& profile) {
    profile.validate();
    profile_ = profile;
}

UserAction UserSimulator::reset() {
    return reset(sample_goal(assets_->schema, assets_->kb, assets_->templates, task_rng_));
}

UserAction UserSimulator::reset(const UserGoal& goal) {
    validate_goal(goal, assets_->schema);
    state_ = UserSimState{};
    state_.goal = goal;

    std::vector<std::string> requests(goal.request_slots.begin(), goal.request_slots.end());
    for (std::size_t i = requests.size(); i > 1; --i) {
        std::swap(requests[i - 1], requests[task_rng_.index(i)]);
    }
    state_.agenda = std::move(requests);
    state_.current_request = state_.agenda.back();
    state_.agenda.pop_back();

    UserAction opening{intent::kRequest, {}, {*state_.current_request}};
    for (const auto& [slot, value] : goal.inform_slots) {
        if (task_rng_.uniform() < 0.5) opening.inform_slots[slot] = value;
    }
    record_user_act(opening);
    return opening;
}

TurnContext UserSimulator::context_for(const AgentAction& agent_action) const {
    TurnContext ctx;
    ctx.turn_index = state_.turn + 1;
    ctx.agent_action = agent_action;
    ctx.user_goal = state_.goal;
    ctx.informed_slots = state_.informed_slots;
    ctx.requested_history = state_.agent_requested;
    ctx.user_requested = state_.user_requested;
    ctx.tau = profile_.tau;
    return ctx;
}

StepResult UserSimulator::step(const AgentAction& agent_action) {
    if (state_.status != DialogueStatus::Ongoing) {
        throw UsageError("step() called on a finished dialogue (status " + std::string(to_string(state_.status)) +
                         ")");
    }
    validate_act(agent_action, assets_->schema);

    const TurnContext ctx = context_for(agent_action);
    state_.turn = ctx.turn_index;
    StepResult result;
    result.triggers = detect_all(ctx);
    const auto v = variation(personality_, result.triggers, profile_);
    state_.emotion = update_state(state_.emotion, personality_, v, profile_);
    if (agent_action.intent == intent::kRequest) {
        for (const auto& s : agent_action.request_slots) state_.agent_requested.insert(s);
    }

    if (should_terminate(state_.emotion, profile_, term_rng_)) {
        result.user_action = UserAction{intent::kTerminating, {}, {}};
        state_.status = DialogueStatus::Terminated;
    } else {
        result.user_action = respond(agent_action);
        if (state_.status == DialogueStatus::Ongoing && state_.turn >= max_turns_) {
            result.user_action = UserAction{intent::kClosing, {}, {}};
            state_.status = DialogueStatus::Failure;
        }
    }
    record_user_act(result.user_action);
    result.emotion = state_.emotion;
    result.status = state_.status;
    return result;
}

UserAction UserSimulator::respond(const AgentAction& agent_action) {
    const auto& goal = state_.goal;
    UserAction answers{intent::kInform, {}, {}};
    UserAction denial{intent::kDeny, {}, {}};
    bool irrelevant = false;

    if (agent_action.intent == intent::kRequest) {
        for (const auto& slot : agent_action.request_slots) {
            if (auto it = goal.inform_slots.find(slot); it != goal.inform_slots.end()) {
                answers.inform_slots[slot] = it->second;
            } else if (!goal.request_slots.count(slot)) {
                irrelevant = true;
            }
        }
    } else if (agent_action.intent == intent::kInform) {
        for (const auto& [slot, value] : agent_action.inform_slots) {
            if (slot == kTaskCompleteSlot) continue;
            if (goal.request_slots.count(slot)) {
                Constraints trial = goal.inform_slots;
                for (const auto& [s, v] : state_.obtained_slots) {
                    if (s != slot) trial[s] = v;
                }
                trial[slot] = value;
                if (assets_->kb.count_matches(trial) > 0) {
                    state_.obtained_slots[slot] = value;
                } else {
                    state_.obtained_slots.erase(slot);
                    denial.request_slots.insert(slot);
                }
            } else if (auto it = goal.inform_slots.find(slot); it != goal.inform_slots.end()) {
                if (it->second != value) denial.inform_slots[slot] = it->second;
            } else {
                irrelevant = true;
            }
        }
    }

    if (!denial.inform_slots.empty() || !denial.request_slots.empty()) return denial;
    if (all_requests_obtained()) {
        state_.status = DialogueStatus::Success;
        return UserAction{intent::kThanks, {}, {}};
    }
    if (!answers.inform_slots.empty()) return answers;
    if (irrelevant) return reassert_constraint();
    return next_agenda_act();
}

bool UserSimulator::all_requests_obtained() const {
    return std::all_of(state_.goal.request_slots.begin(), state_.goal.request_slots.end(),
                       [this](const std::string& s) { return state_.obtained_slots.count(s) > 0; });
}

UserAction UserSimulator::next_agenda_act() {
    while (!state_.current_request || state_.obtained_slots.count(*state_.current_request)) {
        if (state_.agenda.empty()) {
            // every pending request is obtained; only reachable after a deny re-opened one
            for (const auto& s : state_.goal.request_slots) {
                if (!state_.obtained_slots.count(s)) {
                    state_.current_request = s;
                    break;
                }
            }
            break;
        }
        state_.current_request = state_.agenda.back();
        state_.agenda.pop_back();
    }
    return UserAction{intent::kRequest, {}, {*state_.current_request}};
}

UserAction UserSimulator::reassert_constraint() const {
    const auto& constraints = state_.goal.inform_slots;
    if (constraints.empty()) return UserAction{intent::kRequest, {}, {*state_.current_request}};
    for (const auto& [slot, value] : constraints) {
        if (!state_.informed_slots.count(slot)) return UserAction{intent::kInform, {{slot, value}}, {}};
    }
    const auto& first = *constraints.begin();
    return UserAction{intent::kInform, {{first.first, first.second}}, {}};
}

void UserSimulator::record_user_act(const UserAction& act) {
    for (const auto& [slot, value] : act.inform_slots) state_.informed_slots.insert(slot);
    for (const auto& slot : act.request_slots) state_.user_requested.insert(slot);
}

bool dialogue_success(const UserSimState& state) {
    if (state.status == DialogueStatus::Ongoing) throw UsageError("dialogue_success() on an ongoing dialogue");
    return state.status == DialogueStatus::Success;
}

nlohmann::json trace_record(int turn, const AgentAction& agent_action, const StepResult& result) {
    return nlohmann::json{{"turn", turn},
                          {"agent_act", agent_action},
                          {"user_act", result.user_action},
                          {"triggers", result.triggers},
                          {"emotion", result.emotion.intensity},
                          {"status", to_string(result.status)}};
}

}  // namespace affectsim
