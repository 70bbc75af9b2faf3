#pragma once

// Domain schema, dialogue acts, user goals and the synthetic knowledge base.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "affectsim/rng.hpp"
#include "json.hpp"

namespace affectsim {

namespace intent {
inline constexpr const char* kRequest = "request";
inline constexpr const char* kInform = "inform";
inline constexpr const char* kDeny = "deny";
inline constexpr const char* kGreeting = "greeting";
inline constexpr const char* kConfirmQuestion = "confirm_question";
inline constexpr const char* kConfirmAnswer = "confirm_answer";
inline constexpr const char* kMultipleChoice = "multiple_choice";
inline constexpr const char* kThanks = "thanks";
inline constexpr const char* kClosing = "closing";
inline constexpr const char* kTerminating = "terminating";
}  // namespace intent

// Meta slot carried by the agent's task-complete act. Not a goal slot.
inline constexpr const char* kTaskCompleteSlot = "task_complete";

/// Intents shared by every domain, in canonical order.
const std::vector<std::string>& shared_intents();

struct DomainSchema {
    std::string name;
    std::vector<std::string> intents;         // canonical order; used for feature one-hots
    std::vector<std::string> shared_slots;
    std::vector<std::string> domain_slots;
    std::vector<std::string> kb_slots;        // slots carried by every KB record
    std::map<std::string, std::vector<std::string>> vocabulary;  // per kb slot
    int max_turns = 40;

    /// shared_slots followed by domain_slots.
    std::vector<std::string> slots() const;
    bool has_intent(const std::string& i) const;
    bool has_slot(const std::string& s) const;
    bool is_kb_slot(const std::string& s) const;
    /// Throws SchemaError if the required intents are missing or slot lists overlap.
    void validate() const;
};

void from_json(const nlohmann::json& j, DomainSchema& s);
void to_json(nlohmann::json& j, const DomainSchema& s);

struct UserGoal {
    std::map<std::string, std::string> inform_slots;  // constraints
    std::set<std::string> request_slots;              // information sought

    bool operator==(const UserGoal&) const = default;
};

void to_json(nlohmann::json& j, const UserGoal& g);
void from_json(const nlohmann::json& j, UserGoal& g);

/// Throws ValidationError on overlap, empty requests or non-schema slots.
void validate_goal(const UserGoal& goal, const DomainSchema& schema);

struct DialogueAct {
    std::string intent;
    std::map<std::string, std::string> inform_slots;
    std::set<std::string> request_slots;

    /// Every slot named by the act, informs first.
    std::vector<std::string> mentioned_slots() const;
    bool operator==(const DialogueAct&) const = default;
};

using AgentAction = DialogueAct;
using UserAction = DialogueAct;

void to_json(nlohmann::json& j, const DialogueAct& a);
void from_json(const nlohmann::json& j, DialogueAct& a);

/// Throws ValidationError (field = "intent", "inform_slots.<slot>" ...) when the
/// act does not conform to the schema.
void validate_act(const DialogueAct& act, const DomainSchema& schema);

class KbRecord {
public:
    KbRecord(std::shared_ptr<const std::vector<std::string>> columns, std::vector<std::string> values);

    const std::string& value(const std::string& slot) const;
    const std::vector<std::string>& values() const { return values_; }
    std::map<std::string, std::string> as_map() const;

private:
    std::shared_ptr<const std::vector<std::string>> columns_;
    std::vector<std::string> values_;
};

using Constraints = std::map<std::string, std::string>;

class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(std::vector<std::string> columns, const std::vector<std::map<std::string, std::string>>& rows);

    const std::vector<std::string>& columns() const { return *columns_; }
    const std::vector<KbRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool has_column(const std::string& slot) const;

    /// Indices of records matching every constraint. Throws SchemaError for a
    /// slot that is not a KB column.
    std::vector<std::size_t> lookup_indices(const Constraints& constraints) const;
    std::size_t count_matches(const Constraints& constraints) const;

private:
    std::vector<std::pair<std::size_t, const std::string*>> resolve(const Constraints& constraints) const;

    std::shared_ptr<const std::vector<std::string>> columns_ = std::make_shared<std::vector<std::string>>();
    std::vector<KbRecord> records_;
};

/// Exact-match filter over the knowledge base.
std::vector<KbRecord> kb_lookup(const KnowledgeBase& kb, const Constraints& constraints);

void to_json(nlohmann::json& j, const KnowledgeBase& kb);
KnowledgeBase kb_from_json(const nlohmann::json& j, const DomainSchema& schema);

/// Seeded synthetic KB: each record draws every kb slot uniformly from the vocabulary.
KnowledgeBase generate_kb(const DomainSchema& schema, std::size_t n_records, std::uint64_t seed);

struct GoalTemplate {
    std::vector<std::string> inform;
    std::vector<std::string> request;
};

struct GoalTemplates {
    std::vector<GoalTemplate> templates;
    double unsatisfiable_probability = 0.1;
};

GoalTemplates templates_from_json(const nlohmann::json& j, const DomainSchema& schema);

/// Samples a template and a KB record and copies the record's values into the
/// template's constraint slots. With probability `unsatisfiable_probability`
/// one constraint is replaced by a vocabulary value that matches no record
/// (falling through to the next template when the drawn one admits none).
/// Always consumes the same number of draws for the template/record/coin.
UserGoal sample_goal(const DomainSchema& schema, const KnowledgeBase& kb, const GoalTemplates& templates,
                     Rng& rng);

/// Schema, KB and goal templates for one domain, immutable after load.
struct DomainAssets {
    DomainSchema schema;
    KnowledgeBase kb;
    GoalTemplates templates;
};

/// Loads schema.json, kb.json and goal_templates.json from `dir`.
/// Throws ConfigError naming the missing file.
std::shared_ptr<const DomainAssets> load_domain(const std::filesystem::path& dir);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace affectsim
