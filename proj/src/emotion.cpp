#include "affectsim/emotion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "affectsim/errors.hpp"

namespace affectsim {

namespace {

bool in_range(double x, double lo, double hi) { return std::isfinite(x) && x >= lo && x <= hi; }

template <std::size_t R, std::size_t C>
void check_matrix(const Matrix<R, C>& m, double lo, double hi, const char* name) {
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            if (!in_range(m[i][j], lo, hi)) {
                throw ValidationError(std::string(name) + "[" + std::to_string(i) + "][" + std::to_string(j) +
                                          "] out of range",
                                      name);
            }
        }
    }
}

template <std::size_t R, std::size_t C>
Matrix<R, C> matrix_from_json(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != R) {
        throw ConfigError(std::string(name) + ": expected " + std::to_string(R) + " rows");
    }
    Matrix<R, C> m{};
    for (std::size_t i = 0; i < R; ++i) {
        if (!j[i].is_array() || j[i].size() != C) {
            throw ConfigError(std::string(name) + ": row " + std::to_string(i) + " must have " +
                              std::to_string(C) + " columns");
        }
        for (std::size_t k = 0; k < C; ++k) m[i][k] = j[i][k].get<double>();
    }
    return m;
}

// row vector (1 x R) times matrix (R x C)
template <std::size_t R, std::size_t C>
std::array<double, C> row_times(const std::array<double, R>& row, const Matrix<R, C>& m) {
    std::array<double, C> out{};
    for (std::size_t i = 0; i < R; ++i) {
        if (row[i] == 0.0) continue;
        for (std::size_t k = 0; k < C; ++k) out[k] += row[i] * m[i][k];
    }
    return out;
}

std::array<double, kNumTriggers> trigger_row(const TriggerVector& t) {
    std::array<double, kNumTriggers> row{};
    for (std::size_t i = 0; i < kNumTriggers; ++i) row[i] = t.flags[i] ? 1.0 : 0.0;
    return row;
}

}  // namespace

Personality::Personality(const std::array<double, kNumTraits>& weights) : weights_(weights) {
    for (std::size_t i = 0; i < kNumTraits; ++i) {
        if (!in_range(weights[i], 0.0, 1.0)) {
            throw ValidationError("personality component out of [0,1]", std::string(kTraitNames[i]));
        }
    }
}

bool TriggerVector::any() const {
    return std::any_of(flags.begin(), flags.end(), [](bool b) { return b; });
}

void EmotionProfile::validate() const {
    check_matrix(m_te, -1.0, 1.0, "m_te");
    check_matrix(m_pt, 0.0, 1.0, "m_pt");
    check_matrix(m_pe, 0.0, 1.0, "m_pe");
    for (double c : decay_c) {
        if (!in_range(c, 0.0, 1.0)) throw ValidationError("decay constant out of [0,1]", "decay_c");
    }
    if (!in_range(eta_b, 0.0, 1.0)) throw ValidationError("eta_b out of [0,1]", "eta_b");
    if (!in_range(p_term, 0.0, 1.0)) throw ValidationError("p_term out of [0,1]", "p_term");
    if (tau < 1) throw ValidationError("tau must be a positive integer", "tau");
}

void to_json(nlohmann::json& j, const EmotionProfile& p) {
    j = nlohmann::json{{"m_te", p.m_te}, {"m_pt", p.m_pt}, {"m_pe", p.m_pe}, {"decay_c", p.decay_c},
                       {"eta_b", p.eta_b}, {"p_term", p.p_term}, {"tau", p.tau}};
}

void from_json(const nlohmann::json& j, EmotionProfile& p) {
    for (const char* key : {"m_te", "m_pt", "m_pe", "decay_c", "eta_b", "p_term", "tau"}) {
        if (!j.contains(key)) throw ConfigError(std::string("emotion profile missing key '") + key + "'");
    }
    p.m_te = matrix_from_json<kNumTriggers, kNumEmotions>(j.at("m_te"), "m_te");
    p.m_pt = matrix_from_json<kNumTraits, kNumTriggers>(j.at("m_pt"), "m_pt");
    p.m_pe = matrix_from_json<kNumTraits, kNumEmotions>(j.at("m_pe"), "m_pe");
    const auto& c = j.at("decay_c");
    if (!c.is_array() || c.size() != kNumEmotions) throw ConfigError("decay_c: expected 6 values");
    for (std::size_t i = 0; i < kNumEmotions; ++i) p.decay_c[i] = c[i].get<double>();
    p.eta_b = j.at("eta_b").get<double>();
    p.p_term = j.at("p_term").get<double>();
    p.tau = j.at("tau").get<int>();
    p.validate();
}

EmotionProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open emotion profile: " + path.string());
    try {
        return nlohmann::json::parse(in).get<EmotionProfile>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void save_profile(const EmotionProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write emotion profile: " + path.string());
    out << nlohmann::json(profile).dump(2) << '\n';
}

EmotionVariation variation_simple(const TriggerVector& t, const EmotionProfile& profile) {
    return row_times(trigger_row(t), profile.m_te);
}

EmotionVariation variation_unclamped(const Personality& p, const TriggerVector& t,
                                     const EmotionProfile& profile) {
    auto attention = row_times(p.weights(), profile.m_pt);
    const auto fired = trigger_row(t);
    for (std::size_t i = 0; i < kNumTriggers; ++i) attention[i] *= fired[i];
    return row_times(attention, profile.m_te);
}

EmotionVariation variation(const Personality& p, const TriggerVector& t, const EmotionProfile& profile) {
    auto v = variation_unclamped(p, t, profile);
    for (double& x : v) x = std::clamp(x, -1.0, 1.0);
    return v;
}

EmotionVariation decay_term(const EmotionState& e_prev, const EmotionProfile& profile) {
    EmotionVariation d{};
    for (std::size_t i = 0; i < kNumEmotions; ++i) d[i] = -profile.decay_c[i] * e_prev.intensity[i];
    return d;
}

EmotionVariation update_term(std::span<const EmotionState> /*history*/, const Personality& p,
                             const EmotionVariation& v, const EmotionProfile& profile) {
    auto importance = row_times(p.weights(), profile.m_pe);
    for (std::size_t i = 0; i < kNumEmotions; ++i) importance[i] *= v[i];
    return importance;
}

EmotionVector update_unclamped(const EmotionState& e_prev, const Personality& p, const EmotionVariation& v,
                               const EmotionProfile& profile) {
    const auto theta = update_term(std::span<const EmotionState>(&e_prev, 1), p, v, profile);
    const auto phi = decay_term(e_prev, profile);
    EmotionVector e{};
    for (std::size_t i = 0; i < kNumEmotions; ++i) e[i] = e_prev.intensity[i] + theta[i] + phi[i];
    return e;
}

EmotionState update_state(const EmotionState& e_prev, const Personality& p, const EmotionVariation& v,
                          const EmotionProfile& profile) {
    EmotionState next;
    next.intensity = update_unclamped(e_prev, p, v, profile);
    for (double& x : next.intensity) x = std::clamp(x, 0.0, 1.0);
    next.turn_index = e_prev.turn_index + 1;
    return next;
}

EmotionVector normalized(const EmotionState& e) {
    double sum = 0.0;
    for (double x : e.intensity) sum += x;
    EmotionVector out{};
    if (sum <= 0.0) {
        out.fill(1.0 / static_cast<double>(kNumEmotions));
        return out;
    }
    for (std::size_t i = 0; i < kNumEmotions; ++i) out[i] = e.intensity[i] / sum;
    return out;
}

double negative_mass(const EmotionState& e) {
    const auto n = normalized(e);
    return n[static_cast<std::size_t>(Emotion::Angry)] + n[static_cast<std::size_t>(Emotion::Disgust)] +
           n[static_cast<std::size_t>(Emotion::Fear)] + n[static_cast<std::size_t>(Emotion::Sad)];
}

bool should_terminate(const EmotionState& e, const EmotionProfile& profile, Rng& rng) {
    if (!(negative_mass(e) > profile.eta_b)) return false;
    return rng.bernoulli(profile.p_term);
}

}  // namespace affectsim
