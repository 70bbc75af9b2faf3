#pragma once

// Linear emotion model: trigger-driven variation, personality-weighted update,
// constant-rate decay and the negative-mass termination lottery.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>

#include "affectsim/rng.hpp"
#include "json.hpp"

namespace affectsim {

inline constexpr std::size_t kNumTraits = 5;
inline constexpr std::size_t kNumTriggers = 5;
inline constexpr std::size_t kNumEmotions = 6;

enum class Trait : std::size_t { Open, Cons, Extra, Agree, Neuro };
enum class Trigger : std::size_t { Overlong, Irrelevant, Relevant, RepeatedQuery, Initiative };
enum class Emotion : std::size_t { Angry, Disgust, Fear, Happy, Sad, Surprise };

inline constexpr std::array<std::string_view, kNumTriggers> kTriggerNames{"od", "ir", "rr", "rq", "in"};
inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames{
    "angry", "disgust", "fear", "happy", "sad", "surprise"};
inline constexpr std::array<std::string_view, kNumTraits> kTraitNames{
    "open", "cons", "extra", "agree", "neuro"};

template <std::size_t Rows, std::size_t Cols>
using Matrix = std::array<std::array<double, Cols>, Rows>;

using EmotionVector = std::array<double, kNumEmotions>;

/// Big Five weights, each in [0,1].
class Personality {
public:
    Personality() = default;
    /// Throws ValidationError when a component is outside [0,1].
    explicit Personality(const std::array<double, kNumTraits>& weights);

    double operator[](Trait t) const { return weights_[static_cast<std::size_t>(t)]; }
    const std::array<double, kNumTraits>& weights() const { return weights_; }

    bool operator==(const Personality&) const = default;

private:
    std::array<double, kNumTraits> weights_{};
};

struct EmotionState {
    EmotionVector intensity{};
    int turn_index = 0;

    double operator[](Emotion e) const { return intensity[static_cast<std::size_t>(e)]; }
    bool operator==(const EmotionState&) const = default;
};

/// One flag per trigger for a single turn. Irrelevant and Relevant never co-fire.
struct TriggerVector {
    std::array<bool, kNumTriggers> flags{};

    bool operator[](Trigger t) const { return flags[static_cast<std::size_t>(t)]; }
    void set(Trigger t, bool on = true) { flags[static_cast<std::size_t>(t)] = on; }
    bool any() const;
    bool operator==(const TriggerVector&) const = default;
};

using EmotionVariation = EmotionVector;

struct EmotionProfile {
    Matrix<kNumTriggers, kNumEmotions> m_te{};  // trigger -> emotion, entries in [-1,1]
    Matrix<kNumTraits, kNumTriggers> m_pt{};    // personality -> trigger attention, [0,1]
    Matrix<kNumTraits, kNumEmotions> m_pe{};    // personality -> emotion importance, [0,1]
    EmotionVector decay_c{};
    double eta_b = 0.5;
    double p_term = 0.0;
    int tau = 20;

    /// Throws ValidationError naming the first out-of-range field.
    void validate() const;
    bool operator==(const EmotionProfile&) const = default;
};

void to_json(nlohmann::json& j, const EmotionProfile& p);
void from_json(const nlohmann::json& j, EmotionProfile& p);
EmotionProfile load_profile(const std::filesystem::path& path);
void save_profile(const EmotionProfile& profile, const std::filesystem::path& path);

/// Trigger row vector times m_te.
EmotionVariation variation_simple(const TriggerVector& t, const EmotionProfile& profile);

/// ((p . m_pt) * t) . m_te, clamped to [-1,1].
EmotionVariation variation(const Personality& p, const TriggerVector& t, const EmotionProfile& profile);

/// Same product without the final clamp. Exposed for calibration and tests.
EmotionVariation variation_unclamped(const Personality& p, const TriggerVector& t,
                                     const EmotionProfile& profile);

/// Component-wise -C^i * e_prev^i.
EmotionVariation decay_term(const EmotionState& e_prev, const EmotionProfile& profile);

/// (p . m_pe) * v. The history argument is accepted for interface generality
/// but the linear model does not read it.
EmotionVariation update_term(std::span<const EmotionState> history, const Personality& p,
                             const EmotionVariation& v, const EmotionProfile& profile);

/// e_prev + update_term + decay_term, before clamping.
EmotionVector update_unclamped(const EmotionState& e_prev, const Personality& p,
                               const EmotionVariation& v, const EmotionProfile& profile);

/// Clamped update; increments turn_index.
EmotionState update_state(const EmotionState& e_prev, const Personality& p, const EmotionVariation& v,
                          const EmotionProfile& profile);

/// Intensities scaled to sum to one; the zero vector maps to the uniform vector.
EmotionVector normalized(const EmotionState& e);

/// Normalized angry + disgust + fear + sad.
double negative_mass(const EmotionState& e);

/// True iff negative_mass(e) > eta_b and a Bernoulli(p_term) draw succeeds.
/// Consumes exactly one draw from `rng` when the threshold holds, none otherwise.
bool should_terminate(const EmotionState& e, const EmotionProfile& profile, Rng& rng);

}  // namespace affectsim
