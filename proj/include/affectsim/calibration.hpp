#pragma once

// Replaying annotated sessions through the emotion model and producing
// discrepancy reports that guide manual adjustment of the weight matrices.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affectsim/agent.hpp"
#include "affectsim/domain.hpp"
#include "affectsim/emotion.hpp"
#include "affectsim/user_simulator.hpp"

namespace affectsim {

using EmotionLevels = std::array<int, kNumEmotions>;

struct AnnotatedTurn {
    AgentAction agent_act;
    UserAction user_act;
    std::string user_text;
    EmotionLevels levels{1, 1, 1, 1, 1, 1};
};

struct AnnotatedSession {
    std::string session_id;
    std::string domain;
    std::string volunteer;
    int sequence_index = 0;
    Personality personality;
    UserGoal goal;
    std::optional<UserAction> opening_user_act;  // user act preceding the first agent act
    std::vector<AnnotatedTurn> turns;
    std::string status = "ongoing";
};

/// (level - 1) / 4. Throws ValidationError outside 1..5.
double level_to_intensity(int level);
/// Nearest level for an intensity in [0,1].
int intensity_to_level(double intensity);

/// Normalized intensities used for comparison with annotations. Unlike
/// normalized(), a zero state stays zero (no emotion felt).
EmotionVector comparison_vector(const EmotionState& e);
/// comparison_vector quantized to annotation levels.
EmotionLevels levels_for_state(const EmotionState& e);

struct TurnDiscrepancy {
    int turn = 0;
    TriggerVector triggers;
    EmotionVector simulated_raw{};   // comparison_vector, unquantized
    EmotionVector simulated{};       // quantized to the annotation grid
    EmotionVector annotated{};
    EmotionVector error{};           // annotated - simulated
};

struct DiscrepancyReport {
    std::string session_id;
    std::vector<TurnDiscrepancy> turns;
    std::array<int, kNumTriggers> trigger_counts{};
    // per (trigger, emotion), summed over turns where the trigger fired
    Matrix<kNumTriggers, kNumEmotions> error_sum{};
    Matrix<kNumTriggers, kNumEmotions> annotated_delta_sum{};
    Matrix<kNumTriggers, kNumEmotions> simulated_delta_sum{};
    double rmse = 0.0;

    /// Mean signed error for a trigger; nullopt if it never fired.
    std::optional<double> mean_signed_error(Trigger t, Emotion e) const;
};

/// Throws ValidationError listing every offending turn if an act does not
/// conform to the schema.
void validate_session(const AnnotatedSession& session, const DomainSchema& schema);

/// Re-runs trigger detection and emotion updates over the session's agent
/// acts with the session's personality and compares with the annotations.
DiscrepancyReport replay_and_diff(const AnnotatedSession& session, const DomainSchema& schema,
                                  const EmotionProfile& profile);

/// Multiplicative m_te suggestions: pooled mean annotated delta over pooled
/// mean simulated delta per (trigger, emotion); nullopt where undefined.
struct ScalingSuggestion {
    std::array<std::array<std::optional<double>, kNumEmotions>, kNumTriggers> factor{};
};
ScalingSuggestion suggest_scaling(const std::vector<DiscrepancyReport>& reports);

/// Runs one simulated dialogue and records it as an annotated session whose
/// labels are the simulator's own quantized emotion trajectory.
AnnotatedSession simulate_session(UserSimulator& user, DialogueAgent& agent, const std::string& session_id);

// File formats -------------------------------------------------------------

nlohmann::json levels_json(const EmotionLevels& levels);
/// Requires all six emotions with integer levels 1..5; field names the offender.
EmotionLevels levels_from_json(const nlohmann::json& j, const std::string& field_prefix = "emotion_labels");

std::string session_jsonl(const AnnotatedSession& session);
AnnotatedSession parse_session_jsonl(const std::string& text);
AnnotatedSession read_session_file(const std::filesystem::path& path);
void write_session_file(const AnnotatedSession& session, const std::filesystem::path& path);

std::string report_csv(const DiscrepancyReport& report);
std::string report_text(const DiscrepancyReport& report);
nlohmann::json suggestion_json(const ScalingSuggestion& s);

}  // namespace affectsim
