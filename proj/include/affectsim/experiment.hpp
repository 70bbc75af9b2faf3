#pragma once

// Training/evaluation protocol: dialogue rollouts, per-epoch metrics,
// multi-seed experiments, CSV export, learning-curve comparison and charts.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "affectsim/agent.hpp"
#include "affectsim/dqn.hpp"
#include "affectsim/emotion.hpp"
#include "affectsim/user_simulator.hpp"

namespace affectsim {

struct EpochMetrics {
    int epoch = 0;
    double success_rate = 0.0;
    double avg_turns = 0.0;
    double angry = 0.0;
    double disgust = 0.0;
    double happy = 0.0;
    double surprise = 0.0;
    // shares of all fired trigger flags in the epoch
    double od = 0.0;
    double ir = 0.0;
    double rq = 0.0;
    double rr = 0.0;
    double in = 0.0;

    bool operator==(const EpochMetrics&) const = default;
};

/// Both emotion readings for one epoch: `final_turn` averages each dialogue's
/// last normalized state, `per_turn` averages over every turn. The task and
/// trigger columns are identical in the two.
struct EpochReport {
    EpochMetrics final_turn;
    EpochMetrics per_turn;
};

struct DialogueOutcome {
    DialogueStatus status = DialogueStatus::Ongoing;
    int turns = 0;
    std::vector<TriggerVector> triggers;
    std::vector<EmotionVector> normalized;  // per turn
    std::vector<AgentAction> agent_acts;
    std::vector<UserAction> user_acts;      // opening act first
};

using TransitionSink = std::function<void(Transition)>;
using TraceSink = std::function<void(const nlohmann::json&)>;

/// Runs one dialogue to completion. When `sink` is set every agent decision
/// is emitted as a transition with the shaped reward.
DialogueOutcome run_dialogue(DialogueAgent& agent, UserSimulator& user, const TransitionSink& sink = {},
                             const TraceSink& trace = {});

/// Runs `n_dialogues` dialogues and aggregates them.
EpochReport run_epoch(DialogueAgent& agent, UserSimulator& user, int n_dialogues, int epoch,
                      const TransitionSink& sink = {}, const TraceSink& trace = {});

struct ExperimentConfig {
    std::string domain = "movie";
    std::string personality_name = "uA";
    Personality personality;
    EmotionProfile profile;          // p_term inside is the one used
    int epochs = 300;
    int dialogues_per_epoch = 100;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    int max_turns = 0;               // 0: use the schema default
    DqnConfig dqn;
    std::filesystem::path out_dir;   // empty: no files written
    std::filesystem::path resume_from;
    unsigned threads = 0;            // 0: hardware concurrency

    void validate() const;
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<EpochReport> epochs;
};

struct ExperimentResult {
    std::vector<SeedRun> runs;
    std::vector<EpochReport> average;
};

/// Trains one DQN agent against one simulated user for config.epochs epochs.
SeedRun run_seed(const ExperimentConfig& config, std::shared_ptr<const DomainAssets> assets, std::uint64_t seed,
                 const TraceSink& trace = {});

/// All seeds (in parallel, independent state) plus the seed average. Writes
/// metrics.csv, metrics_per_turn.csv and per-seed checkpoints when out_dir is set.
ExperimentResult run_experiment(const ExperimentConfig& config, std::shared_ptr<const DomainAssets> assets);

std::vector<EpochReport> average_curves(const std::vector<SeedRun>& runs);

// ---------------------------------------------------------------------------
// CSV

struct MetricsRow {
    std::string seed;  // decimal seed or "avg"
    EpochMetrics metrics;

    bool operator==(const MetricsRow&) const = default;
};

const std::vector<std::string>& metrics_csv_columns();
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
std::vector<MetricsRow> result_rows(const ExperimentResult& result, bool per_turn);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// success_rate column of the rows whose seed label equals `seed`, by epoch.
std::vector<double> success_curve(const std::vector<MetricsRow>& rows, const std::string& seed = "avg");

/// Root-mean-square pointwise difference over the common prefix.
/// Throws UsageError if either curve is empty.
double compare_curves(std::span<const double> a, std::span<const double> b);

struct RankedCurve {
    std::string label;
    double distance = 0.0;
};
/// Candidates sorted by distance to `reference` (stable on ties).
std::vector<RankedCurve> rank_curves(std::span<const double> reference,
                                     const std::vector<std::pair<std::string, std::vector<double>>>& candidates);

// ---------------------------------------------------------------------------
// Charts

/// One SVG line chart per (quantity, setting): quantity "emotion" plots
/// angry/disgust/happy/surprise, "triggers" plots the five trigger shares.
/// Returns the files written; empty input writes nothing.
std::vector<std::filesystem::path> export_plots(const std::map<std::string, std::vector<EpochMetrics>>& settings,
                                                const std::filesystem::path& outdir);

/// Success-rate curves on one chart.
void export_learning_curves(const std::vector<std::pair<std::string, std::vector<double>>>& curves,
                            const std::filesystem::path& file);

}  // namespace affectsim
