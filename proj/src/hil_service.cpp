#include "affectsim/hil_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "affectsim/errors.hpp"

namespace affectsim {

namespace {

std::string now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

const char* role_name(TranscriptEntry::Role r) { return r == TranscriptEntry::Role::Agent ? "agent" : "user"; }

Personality parse_personality(const nlohmann::json& j) {
    std::array<double, kNumTraits> w{};
    if (j.is_array()) {
        if (j.size() != kNumTraits) throw ValidationError("personality needs 5 components", "personality");
        for (std::size_t i = 0; i < kNumTraits; ++i) {
            if (!j[i].is_number()) throw ValidationError("personality components must be numbers", "personality");
            w[i] = j[i].get<double>();
        }
    } else if (j.is_object()) {
        for (std::size_t i = 0; i < kNumTraits; ++i) {
            const std::string name(kTraitNames[i]);
            if (!j.contains(name) || !j[name].is_number()) {
                throw ValidationError("missing personality trait '" + name + "'", "personality." + name);
            }
            w[i] = j[name].get<double>();
        }
    } else {
        throw ValidationError("personality must be an array or object", "personality");
    }
    try {
        return Personality(w);
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), "personality." + e.field());
    }
}

DialogueAct parse_act(const nlohmann::json& j, const DomainSchema& schema, const std::string& field) {
    try {
        DialogueAct act = j.get<DialogueAct>();
        validate_act(act, schema);
        return act;
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), e.field().empty() ? field : field + "." + e.field());
    }
}

void append_line(const std::filesystem::path& path, const nlohmann::json& event) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to session log: " + path.string());
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------

GreedyPolicy::GreedyPolicy(std::shared_ptr<const DomainAssets> assets, PolicyCheckpoint checkpoint)
    : assets_(std::move(assets)),
      checkpoint_(std::move(checkpoint)),
      featurizer_(assets_->schema, assets_->kb),
      actions_(assets_->schema) {
    if (checkpoint_.domain != assets_->schema.name) {
        throw ConfigError("checkpoint was trained on domain '" + checkpoint_.domain + "', not '" +
                          assets_->schema.name + "'");
    }
    if (checkpoint_.network.input_dim() != featurizer_.dimension() ||
        checkpoint_.network.output_dim() != actions_.size()) {
        throw ConfigError("checkpoint network shape does not match the domain");
    }
}

std::size_t GreedyPolicy::choose(const AgentView& view) const {
    const auto q = q_forward(checkpoint_.network, featurizer_(view));
    return argmax(q);
}

AgentAction GreedyPolicy::act(const AgentView& view) const {
    return actions_.resolve(choose(view), view, assets_->kb);
}

// ---------------------------------------------------------------------------

nlohmann::json snapshot_json(const SessionSnapshot& s) {
    nlohmann::json transcript = nlohmann::json::array();
    for (const auto& e : s.transcript) {
        nlohmann::json t{{"role", role_name(e.role)}, {"act", e.act}};
        if (e.labels) t["emotion_labels"] = levels_json(*e.labels);
        if (e.role == TranscriptEntry::Role::User) t["user_text"] = e.user_text;
        transcript.push_back(std::move(t));
    }
    return {{"session_id", s.session_id},
            {"domain", s.domain},
            {"checkpoint", s.checkpoint},
            {"volunteer", s.volunteer},
            {"sequence_index", s.sequence_index},
            {"personality", s.personality.weights()},
            {"goal", s.goal},
            {"transcript", std::move(transcript)},
            {"status", s.status},
            {"created_at", s.created_at},
            {"updated_at", s.updated_at}};
}

AnnotatedSession to_annotated(const SessionSnapshot& s) {
    AnnotatedSession a;
    a.session_id = s.session_id;
    a.domain = s.domain;
    a.volunteer = s.volunteer;
    a.sequence_index = s.sequence_index;
    a.personality = s.personality;
    a.goal = s.goal;
    a.status = s.status;
    for (std::size_t i = 0; i + 1 < s.transcript.size(); i += 2) {
        const auto& agent = s.transcript[i];
        const auto& user = s.transcript[i + 1];
        a.turns.push_back({agent.act, user.act, user.user_text, user.labels.value_or(EmotionLevels{1, 1, 1, 1, 1, 1})});
    }
    return a;
}

std::string human_curve_csv(const std::vector<bool>& successes) {
    std::string out = "session_index,success,cumulative_success_rate\n";
    int wins = 0;
    for (std::size_t i = 0; i < successes.size(); ++i) {
        wins += successes[i] ? 1 : 0;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%.6f\n", i + 1, successes[i] ? 1 : 0,
                      static_cast<double>(wins) / static_cast<double>(i + 1));
        out += buf;
    }
    return out;
}

std::vector<double> read_human_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read curve file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty curve file: " + path.string(), "header");
    // locate the column by name so extra columns are tolerated
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    const auto it = std::find(header.begin(), header.end(), "cumulative_success_rate");
    if (it == header.end()) throw ValidationError("missing cumulative_success_rate column", "header");
    const auto col = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i <= col; ++i) std::getline(ss, cell, ',');
        out.push_back(std::stod(cell));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct HilService::Session {
    std::mutex mutex;
    SessionSnapshot snap;
    AgentView view;
    int max_turns = 0;
    std::filesystem::path log_path;
    std::shared_ptr<const GreedyPolicy> policy;  // loaded lazily after reload
};

HilService::HilService(HilConfig config) : config_(std::move(config)) {
    if (config_.sessions_dir.empty()) throw ConfigError("sessions_dir is required");
    std::filesystem::create_directories(config_.sessions_dir);
    if (std::filesystem::is_directory(config_.data_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir)) {
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "schema.json")) {
                auto assets = load_domain(entry.path());
                domains_[assets->schema.name] = std::move(assets);
            }
        }
    }
    if (domains_.empty()) throw ConfigError("no domains found under " + config_.data_dir.string());
    reload();
}

HilService::~HilService() = default;

std::shared_ptr<const DomainAssets> HilService::domain(const std::string& name) const {
    const auto it = domains_.find(name);
    if (it == domains_.end()) throw ValidationError("unknown domain '" + name + "'", "domain");
    return it->second;
}

std::shared_ptr<const GreedyPolicy> HilService::policy(const std::string& domain_name, const std::string& checkpoint) {
    std::filesystem::path path(checkpoint);
    if (path.is_relative() && !config_.checkpoint_dir.empty()) path = config_.checkpoint_dir / path;
    const std::string key = domain_name + "|" + path.lexically_normal().string();
    std::lock_guard lock(policy_mutex_);
    if (auto it = policies_.find(key); it != policies_.end()) return it->second;
    auto ckpt = load_checkpoint_file(path);
    auto p = std::make_shared<const GreedyPolicy>(domain(domain_name), std::move(ckpt));
    policies_[key] = p;
    return p;
}

std::shared_ptr<HilService::Session> HilService::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
    return it->second;
}

SessionSnapshot HilService::create_session(const nlohmann::json& request) {
    if (!request.is_object()) throw ValidationError("request body must be an object", "body");
    const std::string domain_name = request.value("domain", std::string());
    if (domain_name.empty()) throw ValidationError("domain is required", "domain");
    auto assets = domain(domain_name);
    const std::string checkpoint = request.contains("checkpoint") && request["checkpoint"].is_string()
                                       ? request["checkpoint"].get<std::string>()
                                       : config_.default_checkpoint;
    if (checkpoint.empty()) throw ValidationError("checkpoint is required", "checkpoint");
    if (!request.contains("personality")) throw ValidationError("personality is required", "personality");
    const Personality personality = parse_personality(request["personality"]);
    const std::string volunteer = request.value("volunteer", std::string("anonymous"));

    std::shared_ptr<const GreedyPolicy> pol;
    try {
        pol = policy(domain_name, checkpoint);
    } catch (const NotFoundError& e) {
        throw NotFoundError(std::string(e.what()));
    }

    const int index = ++counter_;
    auto session = std::make_shared<Session>();
    {
        std::random_device rd;
        char id[32];
        std::snprintf(id, sizeof(id), "s%06d-%08x", index, static_cast<unsigned>(rd()));
        session->snap.session_id = id;
    }
    auto& snap = session->snap;
    snap.domain = domain_name;
    snap.checkpoint = checkpoint;
    snap.volunteer = volunteer;
    if (request.contains("sequence_index") && request["sequence_index"].is_number_integer()) {
        snap.sequence_index = request["sequence_index"].get<int>();
    } else {
        std::shared_lock lock(sessions_mutex_);
        int n = 0;
        for (const auto& [id, s] : sessions_) n += s->snap.volunteer == volunteer ? 1 : 0;
        snap.sequence_index = n + 1;
    }
    snap.personality = personality;
    Rng goal_rng = Rng::derive(config_.seed, static_cast<std::uint64_t>(index));
    snap.goal = sample_goal(assets->schema, assets->kb, assets->templates, goal_rng);
    snap.created_at = snap.updated_at = now_iso();
    session->max_turns = config_.max_turns > 0 ? config_.max_turns : assets->schema.max_turns;
    session->view.max_turns = session->max_turns;
    session->policy = pol;
    session->log_path = config_.sessions_dir / (snap.session_id + ".jsonl");

    // the agent opens every session with a greeting
    const AgentAction greeting =
        pol->actions().resolve(pol->actions().index_of(ActionKind::Greeting), session->view, assets->kb);
    session->view.observe_agent(greeting);
    snap.transcript.push_back({TranscriptEntry::Role::Agent, greeting, std::nullopt, {}});

    append_line(session->log_path, {{"event", "created"},
                                    {"session_id", snap.session_id},
                                    {"domain", snap.domain},
                                    {"checkpoint", snap.checkpoint},
                                    {"volunteer", snap.volunteer},
                                    {"sequence_index", snap.sequence_index},
                                    {"personality", snap.personality.weights()},
                                    {"goal", snap.goal},
                                    {"max_turns", session->max_turns},
                                    {"at", snap.created_at}});
    append_line(session->log_path, {{"event", "agent"}, {"act", greeting}, {"at", snap.created_at}});

    SessionSnapshot copy = snap;
    std::unique_lock lock(sessions_mutex_);
    sessions_[copy.session_id] = std::move(session);
    return copy;
}

SessionSnapshot HilService::post_user_turn(const std::string& session_id, const nlohmann::json& request) {
    auto session = find(session_id);
    std::lock_guard lock(session->mutex);
    auto& snap = session->snap;
    if (snap.status != "ongoing") throw ConflictError("session '" + session_id + "' is " + snap.status);
    if (!request.is_object()) throw ValidationError("request body must be an object", "body");
    auto assets = domain(snap.domain);
    if (!request.contains("user_act")) throw ValidationError("user_act is required", "user_act");
    const DialogueAct act = parse_act(request["user_act"], assets->schema, "user_act");
    if (!request.contains("emotion_labels")) throw ValidationError("emotion_labels are required", "emotion_labels");
    const EmotionLevels labels = levels_from_json(request["emotion_labels"], "emotion_labels");
    const std::string text = request.value("user_text", std::string());

    if (!session->policy) session->policy = policy(snap.domain, snap.checkpoint);

    const std::string at = now_iso();
    append_line(session->log_path, {{"event", "user"},
                                    {"act", act},
                                    {"emotion_labels", levels_json(labels)},
                                    {"user_text", text},
                                    {"at", at}});
    snap.transcript.push_back({TranscriptEntry::Role::User, act, labels, text});
    session->view.observe_user(act);

    std::string status = "ongoing";
    if (act.intent == intent::kTerminating) {
        status = "terminated";
    } else if (act.intent == intent::kClosing || act.intent == intent::kThanks) {
        status = "success";
    } else if (session->view.turn >= session->max_turns) {
        status = "failure";
    }
    if (status == "ongoing") {
        const AgentAction reply = session->policy->act(session->view);
        session->view.observe_agent(reply);
        append_line(session->log_path, {{"event", "agent"}, {"act", reply}, {"at", at}});
        snap.transcript.push_back({TranscriptEntry::Role::Agent, reply, std::nullopt, {}});
    } else {
        append_line(session->log_path, {{"event", "status"}, {"status", status}, {"at", at}});
        snap.status = status;
    }
    snap.updated_at = at;
    return snap;
}

SessionSnapshot HilService::get_session(const std::string& session_id) const {
    auto session = find(session_id);
    std::lock_guard lock(session->mutex);
    return session->snap;
}

std::vector<std::string> HilService::session_ids() const {
    std::shared_lock lock(sessions_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
}

void HilService::reload() {
    int max_index = 0;
    std::vector<std::filesystem::path> logs;
    for (const auto& entry : std::filesystem::directory_iterator(config_.sessions_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
        std::ifstream in(path);
        auto session = std::make_shared<Session>();
        session->log_path = path;
        auto& snap = session->snap;
        std::string line;
        bool created = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto ev = nlohmann::json::parse(line);
            const std::string kind = ev.at("event");
            if (kind == "created") {
                snap.session_id = ev.at("session_id");
                snap.domain = ev.at("domain");
                snap.checkpoint = ev.at("checkpoint");
                snap.volunteer = ev.value("volunteer", "");
                snap.sequence_index = ev.value("sequence_index", 0);
                snap.personality = Personality(ev.at("personality").get<std::array<double, kNumTraits>>());
                snap.goal = ev.at("goal").get<UserGoal>();
                session->max_turns = ev.at("max_turns");
                session->view.max_turns = session->max_turns;
                snap.created_at = snap.updated_at = ev.value("at", "");
                created = true;
            } else if (kind == "agent") {
                const auto act = ev.at("act").get<DialogueAct>();
                session->view.observe_agent(act);
                snap.transcript.push_back({TranscriptEntry::Role::Agent, act, std::nullopt, {}});
                snap.updated_at = ev.value("at", snap.updated_at);
            } else if (kind == "user") {
                const auto act = ev.at("act").get<DialogueAct>();
                session->view.observe_user(act);
                snap.transcript.push_back({TranscriptEntry::Role::User, act, levels_from_json(ev.at("emotion_labels")),
                                           ev.value("user_text", "")});
                snap.updated_at = ev.value("at", snap.updated_at);
            } else if (kind == "status") {
                snap.status = ev.at("status");
                snap.updated_at = ev.value("at", snap.updated_at);
            }
        }
        if (!created) throw IoError("session log without header: " + path.string());
        int index = 0;
        if (std::sscanf(snap.session_id.c_str(), "s%d-", &index) == 1) max_index = std::max(max_index, index);
        sessions_[snap.session_id] = std::move(session);
    }
    counter_ = max_index;
}

ExportResult HilService::export_sessions(const ExportFilter& filter, const std::filesystem::path& dir) const {
    const auto out_dir = dir.empty() ? config_.export_dir : dir;
    if (out_dir.empty()) throw ConfigError("no export directory configured");
    std::vector<SessionSnapshot> chosen;
    for (const auto& id : session_ids()) {  // ids sort in creation order
        SessionSnapshot s = get_session(id);
        if (filter.domain && s.domain != *filter.domain) continue;
        if (filter.volunteer && s.volunteer != *filter.volunteer) continue;
        if (!filter.include_ongoing && s.status == "ongoing") continue;
        chosen.push_back(std::move(s));
    }
    ExportResult result;
    std::vector<bool> successes;
    std::filesystem::create_directories(out_dir / "sessions");
    for (const auto& s : chosen) {
        const auto path = out_dir / "sessions" / (s.session_id + ".jsonl");
        write_session_file(to_annotated(s), path);
        result.session_files.push_back(path);
        if (s.status != "ongoing") {
            successes.push_back(s.status == "success");
            result.successes += s.status == "success" ? 1 : 0;
        }
    }
    result.sessions = static_cast<int>(chosen.size());
    result.curve_file = out_dir / "human_curve.csv";
    std::ofstream out(result.curve_file, std::ios::binary);
    if (!out) throw IoError("cannot write " + result.curve_file.string());
    out << human_curve_csv(successes);
    if (!out) throw IoError("write failed: " + result.curve_file.string());
    return result;
}

nlohmann::json HilService::schema_json(const std::string& domain_name) const {
    nlohmann::json domains = nlohmann::json::object();
    for (const auto& [name, assets] : domains_) {
        if (!domain_name.empty() && name != domain_name) continue;
        domains[name] = assets->schema;
    }
    if (!domain_name.empty() && domains.empty()) throw NotFoundError("unknown domain '" + domain_name + "'");
    nlohmann::json emotions = nlohmann::json::array();
    for (auto e : kEmotionNames) emotions.push_back(e);
    nlohmann::json traits = nlohmann::json::array();
    for (auto t : kTraitNames) traits.push_back(t);
    return {{"domains", domains},
            {"emotions", emotions},
            {"levels", {1, 2, 3, 4, 5}},
            {"traits", traits},
            {"statuses", {"ongoing", "success", "failure", "terminated"}},
            {"endpoints",
             {{"create_session", {{"method", "POST"}, {"path", "/sessions"},
                                  {"body", {{"domain", "movie"}, {"checkpoint", "policy.json"},
                                            {"personality", {0.7, 0.6, 0.8, 0.7, 0.3}}, {"volunteer", "v01"}}}}},
              {"post_turn", {{"method", "POST"}, {"path", "/sessions/{id}/turns"},
                             {"body", {{"user_act", {{"intent", "inform"}, {"inform_slots", {{"city", "seattle"}}},
                                                     {"request_slots", nlohmann::json::array()}}},
                                       {"emotion_labels", {{"angry", 1}, {"disgust", 1}, {"fear", 1},
                                                           {"happy", 3}, {"sad", 1}, {"surprise", 2}}},
                                       {"user_text", ""}}}}},
              {"get_session", {{"method", "GET"}, {"path", "/sessions/{id}"}}},
              {"export", {{"method", "GET"}, {"path", "/export"},
                          {"query", {"domain", "volunteer", "include_ongoing"}}}}}}};
}

HttpResponse HilService::handle(const std::string& method, const std::string& path, const std::string& body,
                                const std::map<std::string, std::string>& query) {
    auto error = [](int status, const std::string& code, const std::string& message, const std::string& field) {
        return HttpResponse{status, {{"code", code}, {"message", message}, {"field", field}}};
    };
    auto param = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = query.find(key);
        if (it == query.end() || it->second.empty()) return std::nullopt;
        return it->second;
    };
    try {
        std::vector<std::string> parts;
        {
            std::stringstream ss(path);
            std::string part;
            while (std::getline(ss, part, '/')) {
                if (!part.empty()) parts.push_back(part);
            }
        }
        auto parse_body = [&]() {
            try {
                return body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError(std::string("malformed JSON: ") + e.what(), "body");
            }
        };
        if (parts.size() == 1 && parts[0] == "schema" && method == "GET") {
            return {200, schema_json(param("domain").value_or(""))};
        }
        if (parts.size() == 1 && parts[0] == "sessions") {
            if (method == "POST") {
                const auto snap = create_session(parse_body());
                auto j = snapshot_json(snap);
                j["agent_act"] = snap.transcript.back().act;
                return {201, j};
            }
            if (method == "GET") {
                nlohmann::json list = nlohmann::json::array();
                for (const auto& id : session_ids()) {
                    const auto s = get_session(id);
                    list.push_back({{"session_id", s.session_id}, {"domain", s.domain}, {"volunteer", s.volunteer},
                                    {"status", s.status}, {"turns", s.transcript.size()}});
                }
                return {200, {{"sessions", list}}};
            }
        }
        if (parts.size() == 2 && parts[0] == "sessions" && method == "GET") {
            return {200, snapshot_json(get_session(parts[1]))};
        }
        if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "turns" && method == "POST") {
            const auto snap = post_user_turn(parts[1], parse_body());
            auto j = snapshot_json(snap);
            const auto& last = snap.transcript.back();
            j["agent_act"] = last.role == TranscriptEntry::Role::Agent ? nlohmann::json(last.act) : nullptr;
            return {200, j};
        }
        if (parts.size() == 1 && parts[0] == "export" && method == "GET") {
            ExportFilter filter;
            filter.domain = param("domain");
            filter.volunteer = param("volunteer");
            filter.include_ongoing = param("include_ongoing").value_or("0") == "1" ||
                                     param("include_ongoing").value_or("") == "true";
            const auto r = export_sessions(filter);
            nlohmann::json files = nlohmann::json::array();
            for (const auto& f : r.session_files) files.push_back(f.string());
            std::ifstream curve(r.curve_file);
            std::stringstream ss;
            ss << curve.rdbuf();
            return {200, {{"sessions", r.sessions}, {"successes", r.successes}, {"files", files},
                          {"curve_file", r.curve_file.string()}, {"curve_csv", ss.str()}}};
        }
        return error(404, "not_found", "no route for " + method + " " + path, "path");
    } catch (const NotFoundError& e) {
        return error(404, "not_found", e.what(), "");
    } catch (const ConflictError& e) {
        return error(409, "conflict", e.what(), "");
    } catch (const ValidationError& e) {
        return error(422, "validation_error", e.what(), e.field());
    } catch (const SchemaError& e) {
        return error(422, "validation_error", e.what(), "");
    } catch (const ConfigError& e) {
        return error(400, "bad_request", e.what(), "");
    } catch (const std::exception& e) {
        return error(500, "internal", e.what(), "");
    }
}

// ---------------------------------------------------------------------------

struct HilHttpServer::Impl {
    explicit Impl(HilService& s) : service(s) {}
    HilService& service;
    httplib::Server server;
};

HilHttpServer::HilHttpServer(HilService& service, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query[k] = v;
        const auto r = impl_->service.handle(req.method, req.path, req.body, query);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto& s = impl_->server;
    if (!static_dir.empty()) s.set_mount_point("/", static_dir.string());
    s.Get("/schema", dispatch);
    s.Get("/export", dispatch);
    s.Get("/sessions", dispatch);
    s.Post("/sessions", dispatch);
    s.Get(R"(/sessions/([^/]+))", dispatch);
    s.Post(R"(/sessions/([^/]+)/turns)", dispatch);
}

HilHttpServer::~HilHttpServer() { stop(); }

int HilHttpServer::bind(const std::string& host, int port) {
    auto& s = impl_->server;
    if (port == 0) return s.bind_to_any_port(host);
    if (!s.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HilHttpServer::listen() { impl_->server.listen_after_bind(); }

void HilHttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace affectsim
