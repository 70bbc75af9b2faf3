#include "affectsim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "affectsim/errors.hpp"
#include "affectsim/triggers.hpp"

namespace affectsim {

double level_to_intensity(int level) {
    if (level < 1 || level > 5) {
        throw ValidationError("emotion level " + std::to_string(level) + " outside 1..5", "level");
    }
    return (level - 1) / 4.0;
}

int intensity_to_level(double intensity) {
    const double x = std::clamp(intensity, 0.0, 1.0);
    return 1 + static_cast<int>(std::lround(4.0 * x));
}

EmotionVector comparison_vector(const EmotionState& e) {
    double sum = 0.0;
    for (double x : e.intensity) sum += x;
    if (sum <= 0.0) return EmotionVector{};
    return normalized(e);
}

EmotionLevels levels_for_state(const EmotionState& e) {
    const auto v = comparison_vector(e);
    EmotionLevels out{};
    for (std::size_t i = 0; i < kNumEmotions; ++i) out[i] = intensity_to_level(v[i]);
    return out;
}

std::optional<double> DiscrepancyReport::mean_signed_error(Trigger t, Emotion e) const {
    const auto k = static_cast<std::size_t>(t);
    if (trigger_counts[k] == 0) return std::nullopt;
    return error_sum[k][static_cast<std::size_t>(e)] / trigger_counts[k];
}

void validate_session(const AnnotatedSession& session, const DomainSchema& schema) {
    std::vector<std::string> problems;
    try {
        validate_goal(session.goal, schema);
    } catch (const ValidationError& e) {
        problems.push_back(std::string("goal: ") + e.what());
    }
    if (session.opening_user_act) {
        try {
            validate_act(*session.opening_user_act, schema);
        } catch (const ValidationError& e) {
            problems.push_back(std::string("opening act: ") + e.what());
        }
    }
    for (std::size_t i = 0; i < session.turns.size(); ++i) {
        const auto& t = session.turns[i];
        for (const auto* act : {&t.agent_act, &t.user_act}) {
            try {
                validate_act(*act, schema);
            } catch (const ValidationError& e) {
                problems.push_back("turn " + std::to_string(i + 1) + " " +
                                   (act == &t.agent_act ? "agent_act" : "user_act") + ": " + e.what());
            }
        }
        for (int level : t.levels) {
            if (level < 1 || level > 5) {
                problems.push_back("turn " + std::to_string(i + 1) + ": emotion level out of 1..5");
                break;
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = "session '" + session.session_id + "' is invalid:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg, "turns");
    }
}

DiscrepancyReport replay_and_diff(const AnnotatedSession& session, const DomainSchema& schema,
                                  const EmotionProfile& profile) {
    validate_session(session, schema);
    DiscrepancyReport report;
    report.session_id = session.session_id;

    std::set<std::string> informed, user_requested;
    std::multiset<std::string> agent_requested;
    auto record_user = [&](const UserAction& act) {
        for (const auto& [slot, value] : act.inform_slots) informed.insert(slot);
        for (const auto& slot : act.request_slots) user_requested.insert(slot);
    };
    if (session.opening_user_act) record_user(*session.opening_user_act);

    EmotionState emotion;
    EmotionVector prev_annotated{}, prev_simulated{};
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < session.turns.size(); ++i) {
        const auto& turn = session.turns[i];
        TurnContext ctx;
        ctx.turn_index = static_cast<int>(i) + 1;
        ctx.agent_action = turn.agent_act;
        ctx.user_goal = session.goal;
        ctx.informed_slots = informed;
        ctx.requested_history = agent_requested;
        ctx.user_requested = user_requested;
        ctx.tau = profile.tau;

        TurnDiscrepancy d;
        d.turn = ctx.turn_index;
        d.triggers = detect_all(ctx);
        emotion = update_state(emotion, session.personality, variation(session.personality, d.triggers, profile),
                               profile);
        d.simulated_raw = comparison_vector(emotion);
        const auto sim_levels = levels_for_state(emotion);
        for (std::size_t k = 0; k < kNumEmotions; ++k) {
            d.simulated[k] = level_to_intensity(sim_levels[k]);
            d.annotated[k] = level_to_intensity(turn.levels[k]);
            d.error[k] = d.annotated[k] - d.simulated[k];
            sq_sum += d.error[k] * d.error[k];
        }
        for (std::size_t t = 0; t < kNumTriggers; ++t) {
            if (!d.triggers.flags[t]) continue;
            ++report.trigger_counts[t];
            for (std::size_t k = 0; k < kNumEmotions; ++k) {
                report.error_sum[t][k] += d.error[k];
                report.annotated_delta_sum[t][k] += d.annotated[k] - prev_annotated[k];
                report.simulated_delta_sum[t][k] += d.simulated[k] - prev_simulated[k];
            }
        }
        prev_annotated = d.annotated;
        prev_simulated = d.simulated;
        report.turns.push_back(d);

        if (turn.agent_act.intent == intent::kRequest) {
            for (const auto& s : turn.agent_act.request_slots) agent_requested.insert(s);
        }
        record_user(turn.user_act);
    }
    const double n = static_cast<double>(session.turns.size() * kNumEmotions);
    report.rmse = n > 0 ? std::sqrt(sq_sum / n) : 0.0;
    return report;
}

ScalingSuggestion suggest_scaling(const std::vector<DiscrepancyReport>& reports) {
    ScalingSuggestion s;
    for (std::size_t t = 0; t < kNumTriggers; ++t) {
        int count = 0;
        std::array<double, kNumEmotions> ann{}, sim{};
        for (const auto& r : reports) {
            count += r.trigger_counts[t];
            for (std::size_t k = 0; k < kNumEmotions; ++k) {
                ann[k] += r.annotated_delta_sum[t][k];
                sim[k] += r.simulated_delta_sum[t][k];
            }
        }
        if (count == 0) continue;
        for (std::size_t k = 0; k < kNumEmotions; ++k) {
            if (sim[k] != 0.0) s.factor[t][k] = ann[k] / sim[k];
        }
    }
    return s;
}

AnnotatedSession simulate_session(UserSimulator& user, DialogueAgent& agent, const std::string& session_id) {
    const auto& assets = user.assets();
    AgentActionSet actions(assets.schema);
    AnnotatedSession session;
    session.session_id = session_id;
    session.domain = assets.schema.name;
    session.volunteer = "simulator";
    session.personality = user.personality();

    AgentView view;
    view.max_turns = user.max_turns();
    const UserAction opening = user.reset();
    session.goal = user.state().goal;
    session.opening_user_act = opening;
    view.observe_user(opening);
    for (;;) {
        const AgentAction act = actions.resolve(agent.act(view), view, assets.kb);
        view.observe_agent(act);
        const StepResult r = user.step(act);
        view.observe_user(r.user_action);
        session.turns.push_back({act, r.user_action, {}, levels_for_state(r.emotion)});
        if (r.status != DialogueStatus::Ongoing) {
            session.status = to_string(r.status);
            break;
        }
    }
    return session;
}

// ---------------------------------------------------------------------------
// Files

nlohmann::json levels_json(const EmotionLevels& levels) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < kNumEmotions; ++i) j[std::string(kEmotionNames[i])] = levels[i];
    return j;
}

EmotionLevels levels_from_json(const nlohmann::json& j, const std::string& field_prefix) {
    if (!j.is_object()) throw ValidationError("emotion labels must be an object", field_prefix);
    EmotionLevels out{};
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
        const std::string name(kEmotionNames[i]);
        const std::string field = field_prefix + "." + name;
        if (!j.contains(name)) throw ValidationError("missing emotion label '" + name + "'", field);
        const auto& v = j.at(name);
        if (!v.is_number_integer()) throw ValidationError("emotion level must be an integer", field);
        const int level = v.get<int>();
        if (level < 1 || level > 5) {
            throw ValidationError("emotion level " + std::to_string(level) + " outside 1..5", field);
        }
        out[i] = level;
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto n : kEmotionNames) known = known || key == n;
        if (!known) throw ValidationError("unknown emotion '" + key + "'", field_prefix + "." + key);
    }
    return out;
}

std::string session_jsonl(const AnnotatedSession& s) {
    nlohmann::json header{{"type", "session"},
                          {"session_id", s.session_id},
                          {"domain", s.domain},
                          {"volunteer", s.volunteer},
                          {"sequence_index", s.sequence_index},
                          {"personality", s.personality.weights()},
                          {"goal", s.goal},
                          {"opening_user_act", s.opening_user_act ? nlohmann::json(*s.opening_user_act) : nullptr},
                          {"status", s.status}};
    std::string out = header.dump() + "\n";
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        const auto& t = s.turns[i];
        nlohmann::json line{{"type", "turn"},
                            {"turn", i + 1},
                            {"agent_act", t.agent_act},
                            {"user_act", t.user_act},
                            {"user_text", t.user_text},
                            {"emotion_labels", levels_json(t.levels)}};
        out += line.dump() + "\n";
    }
    return out;
}

AnnotatedSession parse_session_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    AnnotatedSession s;
    bool have_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what(), "line");
        }
        const auto type = j.value("type", "");
        try {
            if (type == "session") {
                s.session_id = j.value("session_id", "");
                s.domain = j.value("domain", "");
                s.volunteer = j.value("volunteer", "");
                s.sequence_index = j.value("sequence_index", 0);
                s.personality = Personality(j.at("personality").get<std::array<double, kNumTraits>>());
                s.goal = j.at("goal").get<UserGoal>();
                if (j.contains("opening_user_act") && !j["opening_user_act"].is_null()) {
                    s.opening_user_act = j["opening_user_act"].get<DialogueAct>();
                }
                s.status = j.value("status", "ongoing");
                have_header = true;
            } else if (type == "turn") {
                AnnotatedTurn t;
                t.agent_act = j.at("agent_act").get<DialogueAct>();
                t.user_act = j.at("user_act").get<DialogueAct>();
                t.user_text = j.value("user_text", "");
                t.levels = levels_from_json(j.at("emotion_labels"),
                                            "turn " + std::to_string(s.turns.size() + 1) + ".emotion_labels");
                s.turns.push_back(std::move(t));
            } else {
                throw ValidationError("unknown record type '" + type + "'", "type");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what(), "line");
        }
    }
    if (!have_header) throw ValidationError("session file has no session header", "type");
    return s;
}

AnnotatedSession read_session_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read session file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_session_jsonl(ss.str());
}

void write_session_file(const AnnotatedSession& session, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write session file: " + path.string());
    out << session_jsonl(session);
}

namespace {
std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}
}  // namespace

std::string report_csv(const DiscrepancyReport& report) {
    std::string out = "turn,triggers";
    for (auto e : kEmotionNames) out += ",sim_" + std::string(e);
    for (auto e : kEmotionNames) out += ",ann_" + std::string(e);
    for (auto e : kEmotionNames) out += ",err_" + std::string(e);
    out += '\n';
    for (const auto& t : report.turns) {
        std::string trig;
        for (std::size_t k = 0; k < kNumTriggers; ++k) {
            if (t.triggers.flags[k]) trig += (trig.empty() ? "" : "|") + std::string(kTriggerNames[k]);
        }
        out += std::to_string(t.turn) + ',' + (trig.empty() ? "-" : trig);
        for (double x : t.simulated) out += ',' + num(x);
        for (double x : t.annotated) out += ',' + num(x);
        for (double x : t.error) out += ',' + num(x);
        out += '\n';
    }
    return out;
}

std::string report_text(const DiscrepancyReport& report) {
    std::ostringstream s;
    s << "session " << report.session_id << ": " << report.turns.size() << " turns, RMSE " << num(report.rmse)
      << "\n\nmean signed error (annotated - simulated) by trigger:\n";
    s << "trigger  count";
    for (auto e : kEmotionNames) s << "  " << e;
    s << '\n';
    for (std::size_t t = 0; t < kNumTriggers; ++t) {
        s << kTriggerNames[t] << "       " << report.trigger_counts[t];
        for (std::size_t k = 0; k < kNumEmotions; ++k) {
            auto m = report.mean_signed_error(static_cast<Trigger>(t), static_cast<Emotion>(k));
            s << "  " << (m ? num(*m) : std::string("-"));
        }
        s << '\n';
    }
    return s.str();
}

nlohmann::json suggestion_json(const ScalingSuggestion& s) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t t = 0; t < kNumTriggers; ++t) {
        nlohmann::json row = nlohmann::json::object();
        for (std::size_t k = 0; k < kNumEmotions; ++k) {
            if (s.factor[t][k]) row[std::string(kEmotionNames[k])] = *s.factor[t][k];
        }
        j[std::string(kTriggerNames[t])] = std::move(row);
    }
    return nlohmann::json{{"m_te_scaling", j},
                          {"note", "advisory only: multiply m_te[trigger][emotion] by the factor to match annotations"}};
}

}  // namespace affectsim
