#pragma once

// Human-in-the-loop session service. A volunteer plays the user against a
// greedy policy loaded from a checkpoint and annotates six emotion levels per
// turn. Sessions persist as append-only JSON-lines event logs.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "affectsim/agent.hpp"
#include "affectsim/calibration.hpp"
#include "affectsim/domain.hpp"
#include "affectsim/dqn.hpp"

namespace affectsim {

/// Immutable greedy policy shared by every session that references the same
/// checkpoint file.
class GreedyPolicy {
public:
    GreedyPolicy(std::shared_ptr<const DomainAssets> assets, PolicyCheckpoint checkpoint);

    std::size_t choose(const AgentView& view) const;
    AgentAction act(const AgentView& view) const;

    const DomainAssets& assets() const { return *assets_; }
    const AgentActionSet& actions() const { return actions_; }
    const PolicyCheckpoint& checkpoint() const { return checkpoint_; }

private:
    std::shared_ptr<const DomainAssets> assets_;
    PolicyCheckpoint checkpoint_;
    Featurizer featurizer_;
    AgentActionSet actions_;
};

struct HilConfig {
    std::filesystem::path data_dir;         // contains <domain>/schema.json etc.
    std::filesystem::path sessions_dir;     // event logs
    std::filesystem::path checkpoint_dir;   // relative checkpoint references resolve here
    std::filesystem::path export_dir;       // default destination for export
    std::string default_checkpoint;
    int max_turns = 0;                      // 0: schema default
    std::uint64_t seed = 1;                 // goal sampling
};

struct TranscriptEntry {
    enum class Role { Agent, User };
    Role role = Role::Agent;
    DialogueAct act;
    std::optional<EmotionLevels> labels;    // user turns only
    std::string user_text;
};

struct SessionSnapshot {
    std::string session_id;
    std::string domain;
    std::string checkpoint;
    std::string volunteer;
    int sequence_index = 0;
    Personality personality;
    UserGoal goal;
    std::vector<TranscriptEntry> transcript;
    std::string status = "ongoing";
    std::string created_at;
    std::string updated_at;
};

nlohmann::json snapshot_json(const SessionSnapshot& s);
/// Pairs each agent act with the user reply that followed it.
AnnotatedSession to_annotated(const SessionSnapshot& s);

struct ExportFilter {
    std::optional<std::string> domain;
    std::optional<std::string> volunteer;
    bool include_ongoing = false;
};

struct ExportResult {
    std::vector<std::filesystem::path> session_files;
    std::filesystem::path curve_file;
    int sessions = 0;
    int successes = 0;
};

/// session_index,success,cumulative_success_rate rows for sessions in order.
std::string human_curve_csv(const std::vector<bool>& successes);
/// Reads the cumulative_success_rate column of a human curve file.
std::vector<double> read_human_curve(const std::filesystem::path& path);

struct HttpResponse {
    int status = 200;
    nlohmann::json body;
};

class HilService {
public:
    /// Reloads every event log found in `sessions_dir`.
    explicit HilService(HilConfig config);
    ~HilService();
    HilService(const HilService&) = delete;
    HilService& operator=(const HilService&) = delete;

    /// request: {domain, checkpoint?, personality: [5] | {open..neuro}, volunteer?, sequence_index?}
    SessionSnapshot create_session(const nlohmann::json& request);
    /// request: {user_act, emotion_labels, user_text?}
    SessionSnapshot post_user_turn(const std::string& session_id, const nlohmann::json& request);
    SessionSnapshot get_session(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;
    ExportResult export_sessions(const ExportFilter& filter, const std::filesystem::path& dir = {}) const;

    /// Schemas of the loaded domains plus the annotation vocabulary.
    nlohmann::json schema_json(const std::string& domain = {}) const;

    /// Transport-independent routing used by the HTTP server and tests.
    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body,
                        const std::map<std::string, std::string>& query = {});

    const HilConfig& config() const { return config_; }

private:
    struct Session;

    std::shared_ptr<const DomainAssets> domain(const std::string& name) const;
    std::shared_ptr<const GreedyPolicy> policy(const std::string& domain, const std::string& checkpoint);
    std::shared_ptr<Session> find(const std::string& id) const;
    void reload();

    HilConfig config_;
    std::map<std::string, std::shared_ptr<const DomainAssets>> domains_;
    mutable std::mutex policy_mutex_;
    std::map<std::string, std::shared_ptr<const GreedyPolicy>> policies_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<int> counter_{0};
};

/// HTTP front end for a HilService; also serves `static_dir` at / if given.
class HilHttpServer {
public:
    explicit HilHttpServer(HilService& service, std::filesystem::path static_dir = {});
    ~HilHttpServer();

    /// Binds to `port` (0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace affectsim
