#include "affectsim/domain.hpp"

#include <algorithm>
#include <fstream>

#include "affectsim/errors.hpp"

namespace affectsim {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

const std::vector<std::string>& shared_intents() {
    static const std::vector<std::string> intents{
        intent::kRequest,        intent::kInform,         intent::kDeny,  intent::kGreeting,
        intent::kConfirmQuestion, intent::kConfirmAnswer, intent::kMultipleChoice,
        intent::kThanks,         intent::kClosing,        intent::kTerminating};
    return intents;
}

// ---------------------------------------------------------------------------
// DomainSchema

std::vector<std::string> DomainSchema::slots() const {
    std::vector<std::string> all = shared_slots;
    all.insert(all.end(), domain_slots.begin(), domain_slots.end());
    return all;
}

bool DomainSchema::has_intent(const std::string& i) const { return contains(intents, i); }

bool DomainSchema::has_slot(const std::string& s) const {
    return contains(shared_slots, s) || contains(domain_slots, s);
}

bool DomainSchema::is_kb_slot(const std::string& s) const { return contains(kb_slots, s); }

void DomainSchema::validate() const {
    if (name.empty()) throw SchemaError("schema has no name");
    for (const auto& i : shared_intents()) {
        if (!has_intent(i)) throw SchemaError("schema '" + name + "' lacks required intent '" + i + "'");
    }
    for (const auto& s : domain_slots) {
        if (contains(shared_slots, s)) throw SchemaError("slot '" + s + "' is both shared and domain-specific");
    }
    for (const auto& s : kb_slots) {
        if (!has_slot(s)) throw SchemaError("kb slot '" + s + "' not in schema");
        auto it = vocabulary.find(s);
        if (it == vocabulary.end() || it->second.empty()) {
            throw SchemaError("kb slot '" + s + "' has no vocabulary");
        }
    }
    if (max_turns < 1) throw SchemaError("max_turns must be positive");
}

void from_json(const nlohmann::json& j, DomainSchema& s) {
    s.name = j.at("name").get<std::string>();
    s.intents = j.at("intents").get<std::vector<std::string>>();
    s.shared_slots = j.at("shared_slots").get<std::vector<std::string>>();
    s.domain_slots = j.at("domain_slots").get<std::vector<std::string>>();
    s.kb_slots = j.at("kb_slots").get<std::vector<std::string>>();
    s.vocabulary = j.at("vocabulary").get<std::map<std::string, std::vector<std::string>>>();
    s.max_turns = j.value("max_turns", 40);
    s.validate();
}

void to_json(nlohmann::json& j, const DomainSchema& s) {
    j = nlohmann::json{{"name", s.name},         {"intents", s.intents},   {"shared_slots", s.shared_slots},
                       {"domain_slots", s.domain_slots}, {"kb_slots", s.kb_slots},
                       {"vocabulary", s.vocabulary},     {"max_turns", s.max_turns}};
}

// ---------------------------------------------------------------------------
// Goals and acts

void to_json(nlohmann::json& j, const UserGoal& g) {
    j = nlohmann::json{{"inform_slots", g.inform_slots}, {"request_slots", g.request_slots}};
}

void from_json(const nlohmann::json& j, UserGoal& g) {
    g.inform_slots = j.at("inform_slots").get<std::map<std::string, std::string>>();
    g.request_slots = j.at("request_slots").get<std::set<std::string>>();
}

void validate_goal(const UserGoal& goal, const DomainSchema& schema) {
    if (goal.request_slots.empty()) throw ValidationError("goal has no request slots", "request_slots");
    for (const auto& [slot, value] : goal.inform_slots) {
        if (!schema.has_slot(slot)) throw ValidationError("unknown slot '" + slot + "'", "inform_slots." + slot);
        if (goal.request_slots.count(slot)) {
            throw ValidationError("slot '" + slot + "' is both constraint and request", "request_slots." + slot);
        }
    }
    for (const auto& slot : goal.request_slots) {
        if (!schema.has_slot(slot)) throw ValidationError("unknown slot '" + slot + "'", "request_slots." + slot);
    }
}

std::vector<std::string> DialogueAct::mentioned_slots() const {
    std::vector<std::string> out;
    for (const auto& [slot, value] : inform_slots) out.push_back(slot);
    for (const auto& slot : request_slots) {
        if (!inform_slots.count(slot)) out.push_back(slot);
    }
    return out;
}

void to_json(nlohmann::json& j, const DialogueAct& a) {
    j = nlohmann::json{{"intent", a.intent},
                       {"inform_slots", nlohmann::json(a.inform_slots)},
                       {"request_slots", nlohmann::json(a.request_slots)}};
    if (a.inform_slots.empty()) j["inform_slots"] = nlohmann::json::object();
    if (a.request_slots.empty()) j["request_slots"] = nlohmann::json::array();
}

void from_json(const nlohmann::json& j, DialogueAct& a) {
    if (!j.is_object()) throw ValidationError("dialogue act must be an object", "act");
    if (!j.contains("intent") || !j["intent"].is_string()) throw ValidationError("missing intent", "intent");
    a.intent = j["intent"].get<std::string>();
    a.inform_slots.clear();
    a.request_slots.clear();
    if (j.contains("inform_slots")) {
        const auto& inf = j["inform_slots"];
        if (!inf.is_object()) throw ValidationError("inform_slots must be an object", "inform_slots");
        for (const auto& [slot, value] : inf.items()) {
            if (!value.is_string()) throw ValidationError("slot values must be strings", "inform_slots." + slot);
            a.inform_slots[slot] = value.get<std::string>();
        }
    }
    if (j.contains("request_slots")) {
        const auto& req = j["request_slots"];
        if (!req.is_array()) throw ValidationError("request_slots must be an array", "request_slots");
        for (const auto& s : req) {
            if (!s.is_string()) throw ValidationError("request slot names must be strings", "request_slots");
            a.request_slots.insert(s.get<std::string>());
        }
    }
}

void validate_act(const DialogueAct& act, const DomainSchema& schema) {
    if (!schema.has_intent(act.intent)) throw ValidationError("unknown intent '" + act.intent + "'", "intent");
    if (act.intent == intent::kTerminating && (!act.inform_slots.empty() || !act.request_slots.empty())) {
        throw ValidationError("a terminating act carries no slots",
                              act.inform_slots.empty() ? "request_slots" : "inform_slots");
    }
    for (const auto& [slot, value] : act.inform_slots) {
        if (!schema.has_slot(slot)) throw ValidationError("unknown slot '" + slot + "'", "inform_slots." + slot);
    }
    for (const auto& slot : act.request_slots) {
        if (!schema.has_slot(slot)) throw ValidationError("unknown slot '" + slot + "'", "request_slots." + slot);
    }
}

// ---------------------------------------------------------------------------
// Knowledge base

KbRecord::KbRecord(std::shared_ptr<const std::vector<std::string>> columns, std::vector<std::string> values)
    : columns_(std::move(columns)), values_(std::move(values)) {}

const std::string& KbRecord::value(const std::string& slot) const {
    const auto& cols = *columns_;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == slot) return values_[i];
    }
    throw SchemaError("KB record has no slot '" + slot + "'");
}

std::map<std::string, std::string> KbRecord::as_map() const {
    std::map<std::string, std::string> m;
    for (std::size_t i = 0; i < columns_->size(); ++i) m[(*columns_)[i]] = values_[i];
    return m;
}

KnowledgeBase::KnowledgeBase(std::vector<std::string> columns,
                             const std::vector<std::map<std::string, std::string>>& rows)
    : columns_(std::make_shared<const std::vector<std::string>>(std::move(columns))) {
    records_.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<std::string> values;
        values.reserve(columns_->size());
        for (const auto& col : *columns_) {
            auto it = rows[r].find(col);
            if (it == rows[r].end()) {
                throw ConfigError("KB record " + std::to_string(r) + " lacks slot '" + col + "'");
            }
            values.push_back(it->second);
        }
        records_.emplace_back(columns_, std::move(values));
    }
}

bool KnowledgeBase::has_column(const std::string& slot) const { return contains(*columns_, slot); }

std::vector<std::pair<std::size_t, const std::string*>> KnowledgeBase::resolve(
    const Constraints& constraints) const {
    std::vector<std::pair<std::size_t, const std::string*>> resolved;
    for (const auto& [slot, value] : constraints) {
        auto it = std::find(columns_->begin(), columns_->end(), slot);
        if (it == columns_->end()) throw SchemaError("unknown KB slot '" + slot + "'");
        resolved.emplace_back(static_cast<std::size_t>(it - columns_->begin()), &value);
    }
    return resolved;
}

std::vector<std::size_t> KnowledgeBase::lookup_indices(const Constraints& constraints) const {
    const auto resolved = resolve(constraints);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < records_.size(); ++r) {
        const auto& values = records_[r].values();
        bool match = true;
        for (const auto& [col, value] : resolved) {
            if (values[col] != *value) {
                match = false;
                break;
            }
        }
        if (match) out.push_back(r);
    }
    return out;
}

std::size_t KnowledgeBase::count_matches(const Constraints& constraints) const {
    return lookup_indices(constraints).size();
}

std::vector<KbRecord> kb_lookup(const KnowledgeBase& kb, const Constraints& constraints) {
    std::vector<KbRecord> out;
    for (std::size_t i : kb.lookup_indices(constraints)) out.push_back(kb.records()[i]);
    return out;
}

void to_json(nlohmann::json& j, const KnowledgeBase& kb) {
    j = nlohmann::json::object();
    j["columns"] = kb.columns();
    auto rows = nlohmann::json::array();
    for (const auto& rec : kb.records()) rows.push_back(rec.as_map());
    j["records"] = std::move(rows);
}

KnowledgeBase kb_from_json(const nlohmann::json& j, const DomainSchema& schema) {
    auto columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& c : columns) {
        if (!schema.has_slot(c)) throw SchemaError("KB column '" + c + "' not in schema '" + schema.name + "'");
    }
    auto rows = j.at("records").get<std::vector<std::map<std::string, std::string>>>();
    return KnowledgeBase(std::move(columns), rows);
}

KnowledgeBase generate_kb(const DomainSchema& schema, std::size_t n_records, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::map<std::string, std::string>> rows(n_records);
    for (auto& row : rows) {
        for (const auto& slot : schema.kb_slots) {
            const auto& vocab = schema.vocabulary.at(slot);
            row[slot] = vocab[rng.index(vocab.size())];
        }
    }
    return KnowledgeBase(schema.kb_slots, rows);
}

// ---------------------------------------------------------------------------
// Goal sampling

GoalTemplates templates_from_json(const nlohmann::json& j, const DomainSchema& schema) {
    GoalTemplates t;
    t.unsatisfiable_probability = j.value("unsatisfiable_probability", 0.1);
    if (t.unsatisfiable_probability < 0.0 || t.unsatisfiable_probability > 1.0) {
        throw ConfigError("unsatisfiable_probability must be in [0,1]");
    }
    for (const auto& item : j.at("templates")) {
        GoalTemplate g;
        g.inform = item.at("inform").get<std::vector<std::string>>();
        g.request = item.at("request").get<std::vector<std::string>>();
        if (g.request.empty()) throw ConfigError("goal template without request slots");
        for (const auto& s : g.inform) {
            if (!schema.is_kb_slot(s)) throw ConfigError("template constraint '" + s + "' is not a KB slot");
            if (contains(g.request, s)) throw ConfigError("template slot '" + s + "' both informed and requested");
        }
        for (const auto& s : g.request) {
            if (!schema.is_kb_slot(s)) throw ConfigError("template request '" + s + "' is not a KB slot");
        }
        t.templates.push_back(std::move(g));
    }
    if (t.templates.empty()) throw ConfigError("no goal templates for domain '" + schema.name + "'");
    return t;
}

UserGoal sample_goal(const DomainSchema& schema, const KnowledgeBase& kb, const GoalTemplates& templates,
                     Rng& rng) {
    if (templates.templates.empty()) throw ConfigError("goal templates not loaded");
    if (kb.size() == 0) throw ConfigError("knowledge base is empty");
    const auto& tpl = templates.templates[rng.index(templates.templates.size())];
    const auto& record = kb.records()[rng.index(kb.size())];
    const bool make_unsatisfiable = rng.uniform() < templates.unsatisfiable_probability;

    auto from_template = [&](const GoalTemplate& t) {
        UserGoal g;
        for (const auto& s : t.inform) g.inform_slots[s] = record.value(s);
        g.request_slots.insert(t.request.begin(), t.request.end());
        return g;
    };
    UserGoal goal = from_template(tpl);
    if (!make_unsatisfiable) return goal;

    // Replace one constraint with a value no record carries alongside the
    // others. Short templates may admit no such value; the next templates
    // (cyclically) are tried in that case.
    const std::size_t first_slot = rng.index(std::max<std::size_t>(tpl.inform.size(), 1));
    const std::uint64_t offset = rng.next();
    const std::size_t start = static_cast<std::size_t>(&tpl - templates.templates.data());
    for (std::size_t ti = 0; ti < templates.templates.size(); ++ti) {
        const auto& t = templates.templates[(start + ti) % templates.templates.size()];
        UserGoal base = from_template(t);
        for (std::size_t k = 0; k < t.inform.size(); ++k) {
            const auto& slot = t.inform[(first_slot + k) % t.inform.size()];
            const auto& vocab = schema.vocabulary.at(slot);
            for (std::size_t m = 0; m < vocab.size(); ++m) {
                auto trial = base.inform_slots;
                trial[slot] = vocab[(offset + m) % vocab.size()];
                if (kb.count_matches(trial) == 0) {
                    base.inform_slots = std::move(trial);
                    return base;
                }
            }
        }
    }
    return goal;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::shared_ptr<const DomainAssets> load_domain(const std::filesystem::path& dir) {
    auto assets = std::make_shared<DomainAssets>();
    try {
        assets->schema = read_json_file(dir / "schema.json").get<DomainSchema>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError((dir / "schema.json").string() + ": " + e.what());
    }
    try {
        assets->kb = kb_from_json(read_json_file(dir / "kb.json"), assets->schema);
        assets->templates = templates_from_json(read_json_file(dir / "goal_templates.json"), assets->schema);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(dir.string() + ": " + e.what());
    }
    return assets;
}

}  // namespace affectsim
