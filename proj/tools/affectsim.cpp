// affectsim command-line tool: training, p_term sweeps, curve comparison,
// the human-in-the-loop server and calibration utilities.

#include <CLI11.hpp>

#include <charconv>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "affectsim/calibration.hpp"
#include "affectsim/errors.hpp"
#include "affectsim/experiment.hpp"
#include "affectsim/hil_service.hpp"

namespace fs = std::filesystem;
using namespace affectsim;

namespace {

#ifdef AFFECTSIM_DATA_DIR
const char* kDefaultData = AFFECTSIM_DATA_DIR;
#else
const char* kDefaultData = "data";
#endif

std::string shortest(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        double v = 0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (r.ec != std::errc{} || r.ptr != item.data() + item.size()) {
            throw ConfigError("not a number: '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

/// A name from personalities.json or five comma-separated weights.
Personality resolve_personality(const fs::path& data, const std::string& text) {
    if (text.find(',') != std::string::npos) {
        const auto v = parse_list(text);
        if (v.size() != kNumTraits) throw ConfigError("personality needs 5 comma-separated values");
        std::array<double, kNumTraits> w{};
        std::copy(v.begin(), v.end(), w.begin());
        return Personality(w);
    }
    const auto table = read_json_file(data / "personalities.json");
    if (!table.contains(text)) throw ConfigError("unknown personality '" + text + "'");
    std::array<double, kNumTraits> w{};
    for (std::size_t i = 0; i < kNumTraits; ++i) w[i] = table[text].at(std::string(kTraitNames[i])).get<double>();
    return Personality(w);
}

struct TrainOptions {
    std::string domain = "movie";
    std::string profile;
    std::string personality = "uA";
    std::optional<double> p_term;
    int epochs = 300;
    int dialogues = 100;
    int seeds = 5;
    std::uint64_t first_seed = 1;
    int max_turns = 0;
    std::string dqn_config;
    std::optional<double> lr;
    std::string optimizer;
    unsigned threads = 0;
    std::string out;
    std::string resume;
    bool plots = false;
};

void add_train_options(CLI::App* cmd, TrainOptions& o) {
    cmd->add_option("--domain", o.domain, "Domain directory name under the data dir")->capture_default_str();
    cmd->add_option("--profile", o.profile, "Emotion profile JSON (default: profiles/<domain>.json)");
    cmd->add_option("--personality", o.personality, "Personality name or five comma-separated weights")
        ->capture_default_str();
    cmd->add_option("--epochs", o.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--dialogues", o.dialogues, "Dialogues per epoch")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seeds", o.seeds, "Number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--first-seed", o.first_seed)->capture_default_str();
    cmd->add_option("--max-turns", o.max_turns, "0 uses the schema default")->capture_default_str();
    cmd->add_option("--dqn-config", o.dqn_config, "JSON file with DQN hyperparameters");
    cmd->add_option("--lr", o.lr, "Learning rate override");
    cmd->add_option("--optimizer", o.optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
    cmd->add_option("--threads", o.threads, "Worker threads (0: one per core)")->capture_default_str();
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_flag("--plots", o.plots, "Also write SVG charts");
}

ExperimentConfig make_config(const fs::path& data, const TrainOptions& o) {
    ExperimentConfig c;
    c.domain = o.domain;
    c.personality_name = o.personality;
    c.personality = resolve_personality(data, o.personality);
    const fs::path profile = o.profile.empty() ? data / "profiles" / (o.domain + ".json") : fs::path(o.profile);
    c.profile = load_profile(profile);
    if (o.p_term) c.profile.p_term = *o.p_term;
    c.epochs = o.epochs;
    c.dialogues_per_epoch = o.dialogues;
    c.seeds.clear();
    for (int i = 0; i < o.seeds; ++i) c.seeds.push_back(o.first_seed + static_cast<std::uint64_t>(i));
    c.max_turns = o.max_turns;
    if (!o.dqn_config.empty()) c.dqn = read_json_file(o.dqn_config).get<DqnConfig>();
    if (o.lr) c.dqn.learning_rate = *o.lr;
    if (!o.optimizer.empty()) c.dqn.optimizer = o.optimizer;
    c.threads = o.threads;
    c.out_dir = o.out;
    c.resume_from = o.resume;
    return c;
}

std::vector<EpochMetrics> final_metrics(const ExperimentResult& r) {
    std::vector<EpochMetrics> out;
    for (const auto& e : r.average) out.push_back(e.final_turn);
    return out;
}

void print_summary(const ExperimentResult& r) {
    if (r.average.empty()) return;
    for (const auto* e : {&r.average.front(), &r.average.back()}) {
        const auto& m = e->final_turn;
        std::printf("epoch %d: success %.3f turns %.2f rr+in %.3f\n", m.epoch, m.success_rate, m.avg_turns,
                    m.rr + m.in);
    }
}

/// Reads a curve from either a human curve CSV or a metrics CSV (seed=avg).
std::vector<double> load_curve(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string header;
    std::getline(in, header);
    if (header.find("cumulative_success_rate") != std::string::npos) return read_human_curve(path);
    return success_curve(read_metrics_csv(path));
}

HilConfig hil_config(const fs::path& data, const std::string& sessions, const std::string& checkpoints,
                     const std::string& checkpoint, const std::string& export_dir, std::uint64_t seed) {
    HilConfig c;
    c.data_dir = data;
    c.sessions_dir = sessions;
    c.checkpoint_dir = checkpoints;
    c.default_checkpoint = checkpoint;
    c.export_dir = export_dir;
    c.seed = seed;
    return c;
}

HilHttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Emotion-aware user simulation for task-oriented dialogue"};
    app.require_subcommand(1);
    std::string data_dir = kDefaultData;
    app.add_option("--data", data_dir, "Data directory (domains, profiles, personalities)")->capture_default_str();

    // train ------------------------------------------------------------------
    TrainOptions train;
    double train_pterm = -1;
    auto* train_cmd = app.add_subcommand("train", "Train DQN agents against the simulated user");
    add_train_options(train_cmd, train);
    train_cmd->add_option("--p-term", train_pterm, "Termination probability override");
    train_cmd->add_option("--resume", train.resume, "Continue from a checkpoint (single seed)");

    // sweep ------------------------------------------------------------------
    TrainOptions sweep;
    std::string sweep_values = "0,0.01,0.03,0.05,0.10";
    auto* sweep_cmd = app.add_subcommand("sweep", "Train once per p_term value");
    add_train_options(sweep_cmd, sweep);
    sweep_cmd->add_option("--p-term", sweep_values, "Comma-separated p_term values")->capture_default_str();

    // compare ----------------------------------------------------------------
    std::string human;
    std::vector<std::string> sims;
    std::string compare_plot;
    auto* compare_cmd = app.add_subcommand("compare", "Rank simulated learning curves by RMSE to a human curve");
    compare_cmd->add_option("--human", human, "Human curve CSV")->required();
    compare_cmd->add_option("--sim", sims, "Simulated metrics CSVs")->required();
    compare_cmd->add_option("--plot", compare_plot, "Write an SVG with all curves");

    // serve ------------------------------------------------------------------
    std::string host = "127.0.0.1", sessions_dir = "hil/sessions", ckpt_dir = ".", default_ckpt,
                export_dir = "hil/export", static_dir;
    int port = 8080;
    std::uint64_t serve_seed = 1;
    auto* serve_cmd = app.add_subcommand("serve", "Run the human-in-the-loop HTTP service");
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--sessions", sessions_dir, "Session log directory")->capture_default_str();
    serve_cmd->add_option("--checkpoints", ckpt_dir, "Directory for relative checkpoint paths")->capture_default_str();
    serve_cmd->add_option("--checkpoint", default_ckpt, "Default checkpoint for new sessions");
    serve_cmd->add_option("--export", export_dir, "Export directory")->capture_default_str();
    serve_cmd->add_option("--static", static_dir, "Serve console assets from this directory");
    serve_cmd->add_option("--seed", serve_seed, "Goal sampling seed")->capture_default_str();

    // export -----------------------------------------------------------------
    std::string export_sessions_dir = "hil/sessions", export_out = "hil/export", export_domain, export_volunteer;
    bool export_ongoing = false;
    auto* export_cmd = app.add_subcommand("export", "Export stored HIL sessions without starting the server");
    export_cmd->add_option("--sessions", export_sessions_dir)->capture_default_str();
    export_cmd->add_option("--out", export_out)->capture_default_str();
    export_cmd->add_option("--domain", export_domain);
    export_cmd->add_option("--volunteer", export_volunteer);
    export_cmd->add_flag("--include-ongoing", export_ongoing);

    // replay / suggest -------------------------------------------------------
    std::vector<std::string> replay_sessions;
    std::string replay_domain = "movie", replay_profile, replay_csv;
    auto* replay_cmd = app.add_subcommand("replay", "Replay annotated sessions and report discrepancies");
    replay_cmd->add_option("sessions", replay_sessions, "Session files")->required();
    replay_cmd->add_option("--domain", replay_domain)->capture_default_str();
    replay_cmd->add_option("--profile", replay_profile);
    replay_cmd->add_option("--csv-dir", replay_csv, "Write one report CSV per session here");

    std::vector<std::string> suggest_sessions;
    std::string suggest_domain = "movie", suggest_profile, suggest_out;
    auto* suggest_cmd = app.add_subcommand("suggest", "Suggest m_te scaling factors from annotated sessions");
    suggest_cmd->add_option("sessions", suggest_sessions, "Session files")->required();
    suggest_cmd->add_option("--domain", suggest_domain)->capture_default_str();
    suggest_cmd->add_option("--profile", suggest_profile);
    suggest_cmd->add_option("--out", suggest_out, "Suggestion JSON (default: stdout)");

    // make-kb ----------------------------------------------------------------
    std::string kb_domain = "movie", kb_out;
    std::size_t kb_records = 200;
    std::uint64_t kb_seed = 2024;
    auto* kb_cmd = app.add_subcommand("make-kb", "Generate a synthetic knowledge base");
    kb_cmd->add_option("--domain", kb_domain)->capture_default_str();
    kb_cmd->add_option("--records", kb_records)->capture_default_str();
    kb_cmd->add_option("--seed", kb_seed)->capture_default_str();
    kb_cmd->add_option("--out", kb_out, "Output file (default: <data>/<domain>/kb.json)");

    // simulate-session -------------------------------------------------------
    std::string sim_domain = "movie", sim_personality = "uA", sim_profile, sim_agent = "rule", sim_out = "sessions";
    std::uint64_t sim_seed = 1;
    int sim_count = 1;
    auto* sim_cmd = app.add_subcommand("simulate-session", "Write simulator-labelled sessions in calibration format");
    sim_cmd->add_option("--domain", sim_domain)->capture_default_str();
    sim_cmd->add_option("--personality", sim_personality)->capture_default_str();
    sim_cmd->add_option("--profile", sim_profile);
    sim_cmd->add_option("--agent", sim_agent)->check(CLI::IsMember({"rule", "greeting"}))->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed)->capture_default_str();
    sim_cmd->add_option("--count", sim_count)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--out", sim_out, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    const fs::path data(data_dir);

    auto profile_for = [&](const std::string& domain, const std::string& path) {
        return load_profile(path.empty() ? data / "profiles" / (domain + ".json") : fs::path(path));
    };

    try {
        if (*train_cmd) {
            if (train_pterm >= 0) train.p_term = train_pterm;
            const auto config = make_config(data, train);
            const auto result = run_experiment(config, load_domain(data / config.domain));
            if (train.plots) export_plots({{config.personality_name, final_metrics(result)}}, config.out_dir);
            print_summary(result);
        } else if (*sweep_cmd) {
            std::vector<std::pair<std::string, std::vector<double>>> curves;
            std::map<std::string, std::vector<EpochMetrics>> settings;
            auto assets = load_domain(data / sweep.domain);
            for (double p : parse_list(sweep_values)) {
                TrainOptions o = sweep;
                o.p_term = p;
                o.out = (fs::path(sweep.out) / ("pterm_" + shortest(p))).string();
                const auto config = make_config(data, o);
                const auto result = run_experiment(config, assets);
                const auto csv = format_metrics_csv(result_rows(result, false));
                write_text_file(fs::path(sweep.out) / ("pterm_" + shortest(p) + ".csv"), csv);
                curves.emplace_back("p_term=" + shortest(p), success_curve(parse_metrics_csv(csv)));
                settings["pterm_" + shortest(p)] = final_metrics(result);
                std::printf("p_term %s\n", shortest(p).c_str());
                print_summary(result);
            }
            if (sweep.plots) {
                export_plots(settings, sweep.out);
                export_learning_curves(curves, fs::path(sweep.out) / "learning_curves.svg");
            }
        } else if (*compare_cmd) {
            const auto reference = load_curve(human);
            std::vector<std::pair<std::string, std::vector<double>>> candidates;
            for (const auto& s : sims) candidates.emplace_back(s, load_curve(s));
            std::printf("rank,rmse,file\n");
            int rank = 0;
            for (const auto& r : rank_curves(reference, candidates)) {
                std::printf("%d,%s,%s\n", ++rank, shortest(r.distance).c_str(), r.label.c_str());
            }
            if (!compare_plot.empty()) {
                candidates.insert(candidates.begin(), {"human", reference});
                export_learning_curves(candidates, compare_plot);
            }
        } else if (*serve_cmd) {
            HilService service(hil_config(data, sessions_dir, ckpt_dir, default_ckpt, export_dir, serve_seed));
            HilHttpServer server(service, static_dir);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::printf("listening on http://%s:%d (%zu stored sessions)\n", host.c_str(), bound,
                        service.session_ids().size());
            std::fflush(stdout);
            server.listen();
            g_server = nullptr;
        } else if (*export_cmd) {
            HilService service(hil_config(data, export_sessions_dir, ".", "", export_out, 1));
            ExportFilter filter;
            if (!export_domain.empty()) filter.domain = export_domain;
            if (!export_volunteer.empty()) filter.volunteer = export_volunteer;
            filter.include_ongoing = export_ongoing;
            const auto r = service.export_sessions(filter);
            std::printf("%d sessions (%d successful) -> %s\n", r.sessions, r.successes, r.curve_file.string().c_str());
        } else if (*replay_cmd) {
            const auto assets = load_domain(data / replay_domain);
            const auto profile = profile_for(replay_domain, replay_profile);
            for (const auto& file : replay_sessions) {
                const auto report = replay_and_diff(read_session_file(file), assets->schema, profile);
                std::cout << report_text(report) << '\n';
                if (!replay_csv.empty()) {
                    write_text_file(fs::path(replay_csv) / (report.session_id + ".csv"), report_csv(report));
                }
            }
        } else if (*suggest_cmd) {
            const auto assets = load_domain(data / suggest_domain);
            const auto profile = profile_for(suggest_domain, suggest_profile);
            std::vector<DiscrepancyReport> reports;
            for (const auto& file : suggest_sessions) {
                reports.push_back(replay_and_diff(read_session_file(file), assets->schema, profile));
            }
            const auto text = suggestion_json(suggest_scaling(reports)).dump(2) + "\n";
            if (suggest_out.empty()) {
                std::cout << text;
            } else {
                write_text_file(suggest_out, text);
            }
        } else if (*kb_cmd) {
            const DomainSchema schema = read_json_file(data / kb_domain / "schema.json").get<DomainSchema>();
            const nlohmann::json kb = generate_kb(schema, kb_records, kb_seed);
            const fs::path out = kb_out.empty() ? data / kb_domain / "kb.json" : fs::path(kb_out);
            write_text_file(out, kb.dump(1) + "\n");
            std::printf("%zu records -> %s\n", kb_records, out.string().c_str());
        } else if (*sim_cmd) {
            auto assets = load_domain(data / sim_domain);
            const auto profile = profile_for(sim_domain, sim_profile);
            UserSimulator user(assets, resolve_personality(data, sim_personality), profile, assets->schema.max_turns,
                               sim_seed);
            std::unique_ptr<DialogueAgent> agent;
            if (sim_agent == "rule") {
                agent = std::make_unique<RuleAgent>(assets->schema, assets->kb);
            } else {
                agent = std::make_unique<GreetingAgent>(assets->schema);
            }
            for (int i = 0; i < sim_count; ++i) {
                char id[48];
                std::snprintf(id, sizeof(id), "sim-%llu-%03d", static_cast<unsigned long long>(sim_seed), i + 1);
                auto session = simulate_session(user, *agent, id);
                session.sequence_index = i + 1;
                write_session_file(session, fs::path(sim_out) / (std::string(id) + ".jsonl"));
            }
            std::printf("%d sessions -> %s\n", sim_count, sim_out.c_str());
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error%s%s: %s\n", e.field().empty() ? "" : " in ", e.field().c_str(),
                     e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
