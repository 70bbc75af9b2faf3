#pragma once

// Agent-side dialogue tracking, the discrete action set and state features.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affectsim/domain.hpp"

namespace affectsim {

/// What the agent knows about the dialogue so far.
struct AgentView {
    std::string last_user_intent;                     // empty before the first user act
    std::map<std::string, std::string> user_informed; // constraints heard from the user
    std::map<std::string, int> agent_requested;       // request counts per slot
    std::set<std::string> outstanding;                // user requests not yet answered
    std::set<std::string> user_requested;             // every slot the user ever asked for
    std::map<std::string, std::string> agent_informed;
    int turn = 0;                                      // agent acts so far
    int max_turns = 40;

    void observe_user(const UserAction& act);
    void observe_agent(const AgentAction& act);
    /// user_informed restricted to KB columns.
    Constraints kb_constraints(const KnowledgeBase& kb) const;
};

enum class ActionKind { Request, Inform, ConfirmQuestion, ConfirmAnswer, Greeting, Thanks, Closing, TaskComplete };

struct ActionTemplate {
    ActionKind kind;
    std::string slot;  // Request / Inform only

    std::string label() const;
};

/// Fixed, index-stable enumeration of agent act templates for one domain:
/// request(slot) for every slot, inform(slot) for every slot, then the
/// slot-free acts.
class AgentActionSet {
public:
    explicit AgentActionSet(const DomainSchema& schema);

    std::size_t size() const { return templates_.size(); }
    const ActionTemplate& operator[](std::size_t i) const { return templates_.at(i); }
    const std::vector<ActionTemplate>& templates() const { return templates_; }
    std::size_t index_of(ActionKind kind, const std::string& slot = {}) const;

    /// Instantiates template `index`; inform values come from the first KB
    /// record matching the constraints the agent has heard ("no_match" if none).
    AgentAction resolve(std::size_t index, const AgentView& view, const KnowledgeBase& kb) const;

private:
    std::vector<ActionTemplate> templates_;
};

inline constexpr const char* kNoMatchValue = "no_match";

/// Fixed-length encoding of an AgentView, every component in [0,1]:
/// [last user intent one-hot | user-informed slots | agent-requested slots |
///  outstanding requests | turn / max_turns | KB match bucket (0, 1, 2-5, >5)]
class Featurizer {
public:
    Featurizer(const DomainSchema& schema, const KnowledgeBase& kb);

    std::size_t dimension() const { return dim_; }
    std::vector<double> operator()(const AgentView& view) const;

    std::size_t intent_offset() const { return 0; }
    std::size_t informed_offset() const { return intents_.size(); }
    std::size_t requested_offset() const { return informed_offset() + slots_.size(); }
    std::size_t outstanding_offset() const { return requested_offset() + slots_.size(); }
    std::size_t turn_offset() const { return outstanding_offset() + slots_.size(); }
    std::size_t bucket_offset() const { return turn_offset() + 1; }

private:
    std::vector<std::string> intents_;
    std::vector<std::string> slots_;
    const KnowledgeBase* kb_;
    std::size_t dim_;
};

/// Any policy that picks an action index from the agent's view.
class DialogueAgent {
public:
    virtual ~DialogueAgent() = default;
    virtual std::size_t act(const AgentView& view) = 0;
};

/// Hand-written policy: ask for unknown KB constraints until the KB narrows
/// to a single record, then answer the user's outstanding request.
class RuleAgent : public DialogueAgent {
public:
    RuleAgent(const DomainSchema& schema, const KnowledgeBase& kb);
    std::size_t act(const AgentView& view) override;

private:
    const DomainSchema* schema_;
    const KnowledgeBase* kb_;
    AgentActionSet actions_;
};

/// Only ever greets.
class GreetingAgent : public DialogueAgent {
public:
    explicit GreetingAgent(const DomainSchema& schema);
    std::size_t act(const AgentView&) override { return greeting_; }

private:
    std::size_t greeting_;
};

}  // namespace affectsim
