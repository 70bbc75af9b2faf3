#include "affectsim/agent.hpp"

#include <algorithm>

#include "affectsim/errors.hpp"

namespace affectsim {

void AgentView::observe_user(const UserAction& act) {
    last_user_intent = act.intent;
    for (const auto& [slot, value] : act.inform_slots) user_informed[slot] = value;
    if (act.intent == intent::kRequest || act.intent == intent::kDeny) {
        for (const auto& slot : act.request_slots) {
            outstanding.insert(slot);
            user_requested.insert(slot);
        }
    }
}

void AgentView::observe_agent(const AgentAction& act) {
    ++turn;
    if (act.intent == intent::kRequest) {
        for (const auto& slot : act.request_slots) ++agent_requested[slot];
    } else if (act.intent == intent::kInform) {
        for (const auto& [slot, value] : act.inform_slots) {
            outstanding.erase(slot);
            agent_informed[slot] = value;
        }
    }
}

Constraints AgentView::kb_constraints(const KnowledgeBase& kb) const {
    Constraints c;
    for (const auto& [slot, value] : user_informed) {
        if (kb.has_column(slot)) c[slot] = value;
    }
    return c;
}

std::string ActionTemplate::label() const {
    switch (kind) {
        case ActionKind::Request: return "request(" + slot + ")";
        case ActionKind::Inform: return "inform(" + slot + ")";
        case ActionKind::ConfirmQuestion: return "confirm_question";
        case ActionKind::ConfirmAnswer: return "confirm_answer";
        case ActionKind::Greeting: return "greeting";
        case ActionKind::Thanks: return "thanks";
        case ActionKind::Closing: return "closing";
        case ActionKind::TaskComplete: return "taskcomplete";
    }
    return "?";
}

AgentActionSet::AgentActionSet(const DomainSchema& schema) {
    std::vector<std::string> slots;
    for (const auto& s : schema.slots()) {
        if (s != kTaskCompleteSlot) slots.push_back(s);
    }
    for (const auto& s : slots) templates_.push_back({ActionKind::Request, s});
    for (const auto& s : slots) templates_.push_back({ActionKind::Inform, s});
    for (auto k : {ActionKind::ConfirmQuestion, ActionKind::ConfirmAnswer, ActionKind::Greeting, ActionKind::Thanks,
                   ActionKind::Closing, ActionKind::TaskComplete}) {
        templates_.push_back({k, {}});
    }
}

std::size_t AgentActionSet::index_of(ActionKind kind, const std::string& slot) const {
    for (std::size_t i = 0; i < templates_.size(); ++i) {
        if (templates_[i].kind == kind && templates_[i].slot == slot) return i;
    }
    throw SchemaError("no agent action " + ActionTemplate{kind, slot}.label());
}

AgentAction AgentActionSet::resolve(std::size_t index, const AgentView& view, const KnowledgeBase& kb) const {
    const auto& t = templates_.at(index);
    switch (t.kind) {
        case ActionKind::Request: return AgentAction{intent::kRequest, {}, {t.slot}};
        case ActionKind::Inform: {
            std::string value = kNoMatchValue;
            if (kb.has_column(t.slot)) {
                const auto matches = kb.lookup_indices(view.kb_constraints(kb));
                if (!matches.empty()) value = kb.records()[matches.front()].value(t.slot);
            } else if (auto it = view.user_informed.find(t.slot); it != view.user_informed.end()) {
                value = it->second;
            }
            return AgentAction{intent::kInform, {{t.slot, value}}, {}};
        }
        case ActionKind::ConfirmQuestion: return AgentAction{intent::kConfirmQuestion, {}, {}};
        case ActionKind::ConfirmAnswer: return AgentAction{intent::kConfirmAnswer, {}, {}};
        case ActionKind::Greeting: return AgentAction{intent::kGreeting, {}, {}};
        case ActionKind::Thanks: return AgentAction{intent::kThanks, {}, {}};
        case ActionKind::Closing: return AgentAction{intent::kClosing, {}, {}};
        case ActionKind::TaskComplete: {
            const auto matches = kb.lookup_indices(view.kb_constraints(kb));
            return AgentAction{intent::kInform, {{kTaskCompleteSlot, matches.empty() ? kNoMatchValue : "booked"}}, {}};
        }
    }
    throw UsageError("unreachable action kind");
}

Featurizer::Featurizer(const DomainSchema& schema, const KnowledgeBase& kb)
    : intents_(schema.intents), slots_(schema.slots()), kb_(&kb) {
    dim_ = intents_.size() + 3 * slots_.size() + 1 + 4;
}

std::vector<double> Featurizer::operator()(const AgentView& view) const {
    std::vector<double> f(dim_, 0.0);
    for (std::size_t i = 0; i < intents_.size(); ++i) {
        if (intents_[i] == view.last_user_intent) f[intent_offset() + i] = 1.0;
    }
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const auto& s = slots_[i];
        if (view.user_informed.count(s)) f[informed_offset() + i] = 1.0;
        if (view.agent_requested.count(s)) f[requested_offset() + i] = 1.0;
        if (view.outstanding.count(s)) f[outstanding_offset() + i] = 1.0;
    }
    const double max_turns = std::max(1, view.max_turns);
    f[turn_offset()] = std::clamp(static_cast<double>(view.turn) / max_turns, 0.0, 1.0);

    const std::size_t matches = kb_->count_matches(view.kb_constraints(*kb_));
    std::size_t bucket = 3;
    if (matches == 0) bucket = 0;
    else if (matches == 1) bucket = 1;
    else if (matches <= 5) bucket = 2;
    f[bucket_offset() + bucket] = 1.0;
    return f;
}

RuleAgent::RuleAgent(const DomainSchema& schema, const KnowledgeBase& kb)
    : schema_(&schema), kb_(&kb), actions_(schema) {}

std::size_t RuleAgent::act(const AgentView& view) {
    const auto known = view.kb_constraints(*kb_);
    const std::size_t matches = kb_->count_matches(known);

    std::string next_constraint;
    for (const auto& s : schema_->kb_slots) {
        if (view.user_informed.count(s) || view.agent_requested.count(s) || view.user_requested.count(s)) continue;
        next_constraint = s;
        break;
    }
    if (!view.outstanding.empty() && (matches <= 1 || next_constraint.empty())) {
        return actions_.index_of(ActionKind::Inform, *view.outstanding.begin());
    }
    if (!next_constraint.empty()) return actions_.index_of(ActionKind::Request, next_constraint);
    if (!view.outstanding.empty()) return actions_.index_of(ActionKind::Inform, *view.outstanding.begin());
    return actions_.index_of(ActionKind::TaskComplete);
}

GreetingAgent::GreetingAgent(const DomainSchema& schema)
    : greeting_(AgentActionSet(schema).index_of(ActionKind::Greeting)) {}

}  // namespace affectsim
