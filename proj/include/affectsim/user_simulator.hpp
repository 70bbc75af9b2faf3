#pragma once

// Agenda-based task-completion user with the emotion model layered on top.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "affectsim/domain.hpp"
#include "affectsim/emotion.hpp"
#include "affectsim/triggers.hpp"

namespace affectsim {

enum class DialogueStatus { Ongoing, Success, Failure, Terminated };

const char* to_string(DialogueStatus s);
DialogueStatus status_from_string(const std::string& s);

struct UserSimState {
    UserGoal goal;
    std::vector<std::string> agenda;               // LIFO of pending request slots
    std::optional<std::string> current_request;
    std::set<std::string> informed_slots;
    std::set<std::string> user_requested;
    std::multiset<std::string> agent_requested;
    std::map<std::string, std::string> obtained_slots;
    EmotionState emotion;
    DialogueStatus status = DialogueStatus::Ongoing;
    int turn = 0;
};

struct StepResult {
    UserAction user_action;
    TriggerVector triggers;
    EmotionState emotion;
    DialogueStatus status = DialogueStatus::Ongoing;
};

/// One simulated user. Goal sampling and agenda ordering draw from a task
/// stream; the termination lottery draws from a separate stream so that
/// turning termination on or off (or changing personality) never perturbs
/// task behaviour before the first termination.
class UserSimulator {
public:
    UserSimulator(std::shared_ptr<const DomainAssets> assets, Personality personality, EmotionProfile profile,
                  int max_turns, std::uint64_t seed);

    /// Samples a goal and returns the opening user act. Emotion resets to zero.
    UserAction reset();
    UserAction reset(const UserGoal& goal);

    /// Processes one agent act. Throws UsageError once the dialogue has ended.
    StepResult step(const AgentAction& agent_action);

    /// Trigger-detection context for `agent_action` given the current state.
    TurnContext context_for(const AgentAction& agent_action) const;

    const UserSimState& state() const { return state_; }
    const Personality& personality() const { return personality_; }
    const EmotionProfile& profile() const { return profile_; }
    const DomainAssets& assets() const { return *assets_; }
    int max_turns() const { return max_turns_; }

    void set_profile(const EmotionProfile& profile);

private:
    UserAction respond(const AgentAction& agent_action);
    UserAction next_agenda_act();
    UserAction reassert_constraint() const;
    bool all_requests_obtained() const;
    void record_user_act(const UserAction& act);

    std::shared_ptr<const DomainAssets> assets_;
    Personality personality_;
    EmotionProfile profile_;
    int max_turns_;
    Rng task_rng_;
    Rng term_rng_;
    UserSimState state_;
};

/// True iff the finished dialogue reached Success. Throws UsageError while ongoing.
bool dialogue_success(const UserSimState& state);

/// One JSON-lines trace record.
nlohmann::json trace_record(int turn, const AgentAction& agent_action, const StepResult& result);

}  // namespace affectsim
