// Python bindings. Structured values cross the boundary as plain dicts and
// lists through the json module; numeric hot paths stay in C++.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "affectsim/calibration.hpp"
#include "affectsim/errors.hpp"
#include "affectsim/experiment.hpp"

namespace py = pybind11;
using namespace affectsim;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

json metrics_json(const EpochMetrics& m) {
    return {{"epoch", m.epoch}, {"success_rate", m.success_rate}, {"avg_turns", m.avg_turns},
            {"angry", m.angry}, {"disgust", m.disgust},           {"happy", m.happy},
            {"surprise", m.surprise}, {"od", m.od}, {"ir", m.ir}, {"rq", m.rq}, {"rr", m.rr}, {"in", m.in}};
}

json triggers_json(const TriggerVector& t) {
    json j = json::object();
    for (std::size_t i = 0; i < kNumTriggers; ++i) j[std::string(kTriggerNames[i])] = t.flags[i];
    return j;
}

json emotions_json(const EmotionVector& v) {
    json j = json::object();
    for (std::size_t i = 0; i < kNumEmotions; ++i) j[std::string(kEmotionNames[i])] = v[i];
    return j;
}

TriggerVector triggers_from(const std::vector<std::string>& names) {
    TriggerVector t;
    for (const auto& n : names) {
        const auto it = std::find(kTriggerNames.begin(), kTriggerNames.end(), n);
        if (it == kTriggerNames.end()) throw ValidationError("unknown trigger '" + n + "'", "triggers");
        t.flags[static_cast<std::size_t>(it - kTriggerNames.begin())] = true;
    }
    return t;
}

json report_json(const DiscrepancyReport& r) {
    json turns = json::array();
    for (const auto& d : r.turns) {
        turns.push_back({{"turn", d.turn}, {"triggers", triggers_json(d.triggers)},
                         {"simulated", emotions_json(d.simulated)}, {"annotated", emotions_json(d.annotated)},
                         {"error", emotions_json(d.error)}});
    }
    return {{"session_id", r.session_id}, {"rmse", r.rmse}, {"turns", turns}};
}

/// Owns the domain assets so the simulator outlives the Python caller's refs.
class PySimulator {
public:
    PySimulator(const std::string& domain_dir, std::array<double, kNumTraits> personality,
                const std::string& profile_path, int max_turns, std::uint64_t seed)
        : assets_(load_domain(domain_dir)),
          user_(assets_, Personality(personality), load_profile(profile_path),
                max_turns > 0 ? max_turns : assets_->schema.max_turns, seed) {}

    py::object reset() { return to_py(user_.reset()); }

    py::object step(const py::dict& agent_act) {
        const auto act = from_py(agent_act).get<DialogueAct>();
        validate_act(act, assets_->schema);
        const auto r = user_.step(act);
        return to_py({{"user_act", r.user_action},
                      {"triggers", triggers_json(r.triggers)},
                      {"emotion", emotions_json(r.emotion.intensity)},
                      {"normalized", emotions_json(normalized(r.emotion))},
                      {"status", to_string(r.status)}});
    }

    py::object goal() const { return to_py(user_.state().goal); }

private:
    std::shared_ptr<const DomainAssets> assets_;
    UserSimulator user_;
};

py::object train(const std::string& data_dir, const std::string& domain, const std::string& personality_name,
                 std::array<double, kNumTraits> personality, std::optional<double> p_term, int epochs,
                 int dialogues, std::vector<std::uint64_t> seeds, const std::string& out_dir, unsigned threads) {
    ExperimentConfig c;
    c.domain = domain;
    c.personality_name = personality_name;
    c.personality = Personality(personality);
    c.profile = load_profile(std::filesystem::path(data_dir) / "profiles" / (domain + ".json"));
    if (p_term) c.profile.p_term = *p_term;
    c.epochs = epochs;
    c.dialogues_per_epoch = dialogues;
    c.seeds = std::move(seeds);
    c.out_dir = out_dir;
    c.threads = threads;
    ExperimentResult r;
    {
        py::gil_scoped_release release;
        r = run_experiment(c, load_domain(std::filesystem::path(data_dir) / domain));
    }
    json avg = json::array(), per_turn = json::array();
    for (const auto& e : r.average) {
        avg.push_back(metrics_json(e.final_turn));
        per_turn.push_back(metrics_json(e.per_turn));
    }
    return to_py({{"average", avg}, {"average_per_turn", per_turn}});
}

}  // namespace

PYBIND11_MODULE(_affectsim, m) {
    m.doc() = "Emotion-aware user simulator core";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_FileNotFoundError);

    m.attr("default_data_dir") = AFFECTSIM_DATA_DIR;
    m.attr("emotions") = std::vector<std::string>(kEmotionNames.begin(), kEmotionNames.end());
    m.attr("triggers") = std::vector<std::string>(kTriggerNames.begin(), kTriggerNames.end());

    m.def(
        "update_emotion",
        [](std::array<double, kNumEmotions> intensity, std::array<double, kNumTraits> personality,
           const std::vector<std::string>& triggers, const std::string& profile_path) {
            const auto profile = load_profile(profile_path);
            const Personality p(personality);
            EmotionState e;
            e.intensity = intensity;
            const auto next = update_state(e, p, variation(p, triggers_from(triggers), profile), profile);
            return next.intensity;
        },
        py::arg("intensity"), py::arg("personality"), py::arg("triggers"), py::arg("profile_path"),
        "One emotion update for the fired trigger names.");

    m.def("compare_curves", [](const std::vector<double>& a, const std::vector<double>& b) {
        return compare_curves(a, b);
    });
    m.def("rank_curves",
          [](const std::vector<double>& reference, const std::vector<std::pair<std::string, std::vector<double>>>& c) {
              std::vector<std::pair<std::string, double>> out;
              for (const auto& r : rank_curves(reference, c)) out.emplace_back(r.label, r.distance);
              return out;
          });

    py::class_<PySimulator>(m, "UserSimulator")
        .def(py::init<const std::string&, std::array<double, kNumTraits>, const std::string&, int, std::uint64_t>(),
             py::arg("domain_dir"), py::arg("personality"), py::arg("profile_path"), py::arg("max_turns") = 0,
             py::arg("seed") = 1)
        .def("reset", &PySimulator::reset, "Samples a goal and returns the opening user act.")
        .def("step", &PySimulator::step, py::arg("agent_act"))
        .def("goal", &PySimulator::goal);

    m.def("train", &train, py::arg("data_dir"), py::arg("domain"), py::arg("personality_name"),
          py::arg("personality"), py::arg("p_term") = std::nullopt, py::arg("epochs") = 300,
          py::arg("dialogues") = 100, py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3, 4, 5},
          py::arg("out_dir") = "", py::arg("threads") = 0u);

    m.def(
        "replay_session",
        [](const std::string& session_path, const std::string& domain_dir, const std::string& profile_path) {
            const auto assets = load_domain(domain_dir);
            return to_py(report_json(replay_and_diff(read_session_file(session_path), assets->schema,
                                                     load_profile(profile_path))));
        },
        py::arg("session_path"), py::arg("domain_dir"), py::arg("profile_path"));
}
