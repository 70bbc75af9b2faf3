#include "affectsim/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "affectsim/errors.hpp"

namespace affectsim {

namespace {

struct DomainTools {
    explicit DomainTools(const DomainAssets& assets) : featurizer(assets.schema, assets.kb), actions(assets.schema) {}
    Featurizer featurizer;
    AgentActionSet actions;
};

DialogueOutcome run_dialogue_with(DialogueAgent& agent, UserSimulator& user, const DomainTools& tools,
                                  const TransitionSink& sink, const TraceSink& trace) {
    DialogueOutcome outcome;
    const auto& kb = user.assets().kb;
    AgentView view;
    view.max_turns = user.max_turns();
    const UserAction opening = user.reset();
    view.observe_user(opening);
    outcome.user_acts.push_back(opening);

    std::vector<double> state;
    if (sink) state = tools.featurizer(view);
    for (;;) {
        const std::size_t a = agent.act(view);
        const AgentAction act = tools.actions.resolve(a, view, kb);
        view.observe_agent(act);
        const StepResult r = user.step(act);
        view.observe_user(r.user_action);

        outcome.agent_acts.push_back(act);
        outcome.user_acts.push_back(r.user_action);
        outcome.triggers.push_back(r.triggers);
        outcome.normalized.push_back(normalized(r.emotion));
        if (trace) trace(trace_record(user.state().turn, act, r));

        const bool terminal = r.status != DialogueStatus::Ongoing;
        if (sink) {
            auto next = tools.featurizer(view);
            sink(Transition{state, a, reward(r.status, user.max_turns()), next, terminal});
            state = std::move(next);
        }
        if (terminal) {
            outcome.status = r.status;
            break;
        }
    }
    outcome.turns = user.state().turn;
    return outcome;
}

struct EpochAccumulator {
    int dialogues = 0;
    int successes = 0;
    long turns = 0;
    std::array<long, kNumTriggers> trigger_counts{};
    EmotionVector final_sum{};
    EmotionVector turn_sum{};
    long turn_samples = 0;

    void add(const DialogueOutcome& d) {
        ++dialogues;
        if (d.status == DialogueStatus::Success) ++successes;
        turns += d.turns;
        for (const auto& t : d.triggers) {
            for (std::size_t i = 0; i < kNumTriggers; ++i) trigger_counts[i] += t.flags[i] ? 1 : 0;
        }
        if (!d.normalized.empty()) {
            for (std::size_t i = 0; i < kNumEmotions; ++i) final_sum[i] += d.normalized.back()[i];
        }
        for (const auto& n : d.normalized) {
            for (std::size_t i = 0; i < kNumEmotions; ++i) turn_sum[i] += n[i];
            ++turn_samples;
        }
    }

    EpochReport report(int epoch) const {
        EpochMetrics m;
        m.epoch = epoch;
        if (dialogues > 0) {
            m.success_rate = static_cast<double>(successes) / dialogues;
            m.avg_turns = static_cast<double>(turns) / dialogues;
        }
        long total = 0;
        for (long c : trigger_counts) total += c;
        if (total > 0) {
            auto share = [&](Trigger t) {
                return static_cast<double>(trigger_counts[static_cast<std::size_t>(t)]) / static_cast<double>(total);
            };
            m.od = share(Trigger::Overlong);
            m.ir = share(Trigger::Irrelevant);
            m.rq = share(Trigger::RepeatedQuery);
            m.rr = share(Trigger::Relevant);
            m.in = share(Trigger::Initiative);
        }
        EpochReport r{m, m};
        auto fill = [](EpochMetrics& out, const EmotionVector& sum, double n) {
            if (n <= 0) return;
            out.angry = sum[static_cast<std::size_t>(Emotion::Angry)] / n;
            out.disgust = sum[static_cast<std::size_t>(Emotion::Disgust)] / n;
            out.happy = sum[static_cast<std::size_t>(Emotion::Happy)] / n;
            out.surprise = sum[static_cast<std::size_t>(Emotion::Surprise)] / n;
        };
        fill(r.final_turn, final_sum, dialogues);
        fill(r.per_turn, turn_sum, static_cast<double>(turn_samples));
        return r;
    }
};

}  // namespace

DialogueOutcome run_dialogue(DialogueAgent& agent, UserSimulator& user, const TransitionSink& sink,
                             const TraceSink& trace) {
    DomainTools tools(user.assets());
    return run_dialogue_with(agent, user, tools, sink, trace);
}

EpochReport run_epoch(DialogueAgent& agent, UserSimulator& user, int n_dialogues, int epoch,
                      const TransitionSink& sink, const TraceSink& trace) {
    DomainTools tools(user.assets());
    EpochAccumulator acc;
    for (int i = 0; i < n_dialogues; ++i) acc.add(run_dialogue_with(agent, user, tools, sink, trace));
    return acc.report(epoch);
}

// ---------------------------------------------------------------------------
// Experiments

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (dialogues_per_epoch < 1) throw ConfigError("dialogues per epoch must be at least 1");
    if (!resume_from.empty() && seeds.size() != 1) throw ConfigError("resuming requires exactly one seed");
    profile.validate();
    dqn.validate();
}

SeedRun run_seed(const ExperimentConfig& config, std::shared_ptr<const DomainAssets> assets, std::uint64_t seed,
                 const TraceSink& trace) {
    const int max_turns = config.max_turns > 0 ? config.max_turns : assets->schema.max_turns;
    UserSimulator user(assets, config.personality, config.profile, max_turns, seed);
    DqnAgent agent(*assets, config.dqn, seed);
    const TransitionSink remember = [&agent](Transition t) { agent.remember(std::move(t)); };

    int first_epoch = 1;
    if (!config.resume_from.empty()) {
        agent.load_checkpoint(config.resume_from);
        first_epoch = agent.epoch() + 1;
    } else {
        RuleAgent warm(assets->schema, assets->kb);
        for (int i = 0; i < config.dqn.warm_start_dialogues; ++i) run_dialogue(warm, user, remember);
    }

    DomainTools tools(*assets);
    SeedRun run{seed, {}};
    for (int epoch = first_epoch; epoch <= config.epochs; ++epoch) {
        agent.set_epsilon(agent.epsilon_for_epoch(epoch, config.epochs));
        EpochAccumulator acc;
        for (int d = 0; d < config.dialogues_per_epoch; ++d) {
            TraceSink tagged;
            if (trace) {
                tagged = [&, d](const nlohmann::json& rec) {
                    auto r = rec;
                    r["seed"] = seed;
                    r["epoch"] = epoch;
                    r["dialogue"] = d;
                    trace(r);
                };
            }
            acc.add(run_dialogue_with(agent, user, tools, remember, tagged));
        }
        run.epochs.push_back(acc.report(epoch));
        agent.train_epoch();
    }
    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        agent.save_checkpoint(config.out_dir / ("checkpoint_seed" + std::to_string(seed) + ".json"), config.domain);
    }
    return run;
}

std::vector<EpochReport> average_curves(const std::vector<SeedRun>& runs) {
    std::vector<EpochReport> avg;
    if (runs.empty()) return avg;
    std::size_t n = runs.front().epochs.size();
    for (const auto& r : runs) n = std::min(n, r.epochs.size());
    const double k = static_cast<double>(runs.size());
    for (std::size_t e = 0; e < n; ++e) {
        EpochReport out{};
        auto accumulate = [&](EpochMetrics EpochReport::*which) {
            EpochMetrics& m = out.*which;
            m.epoch = (runs.front().epochs[e].*which).epoch;
            for (const auto& r : runs) {
                const EpochMetrics& x = r.epochs[e].*which;
                m.success_rate += x.success_rate;
                m.avg_turns += x.avg_turns;
                m.angry += x.angry;
                m.disgust += x.disgust;
                m.happy += x.happy;
                m.surprise += x.surprise;
                m.od += x.od;
                m.ir += x.ir;
                m.rq += x.rq;
                m.rr += x.rr;
                m.in += x.in;
            }
            for (double* f : {&m.success_rate, &m.avg_turns, &m.angry, &m.disgust, &m.happy, &m.surprise, &m.od,
                              &m.ir, &m.rq, &m.rr, &m.in}) {
                *f /= k;
            }
        };
        accumulate(&EpochReport::final_turn);
        accumulate(&EpochReport::per_turn);
        avg.push_back(out);
    }
    return avg;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::shared_ptr<const DomainAssets> assets) {
    config.validate();
    ExperimentResult result;
    result.runs.resize(config.seeds.size());

    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(config.seeds.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < config.seeds.size(); ++i) result.runs[i] = run_seed(config, assets, config.seeds[i]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < config.seeds.size(); i += threads) {
                        result.runs[i] = run_seed(config, assets, config.seeds[i]);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    result.average = average_curves(result.runs);

    if (!config.out_dir.empty()) {
        write_text_file(config.out_dir / "metrics.csv", format_metrics_csv(result_rows(result, false)));
        write_text_file(config.out_dir / "metrics_per_turn.csv", format_metrics_csv(result_rows(result, true)));
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

double parse_double(const std::string& s, std::size_t line) {
    double x = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw ConfigError("metrics CSV line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return x;
}

std::vector<double EpochMetrics::*> metric_fields() {
    return {&EpochMetrics::success_rate, &EpochMetrics::avg_turns, &EpochMetrics::angry, &EpochMetrics::disgust,
            &EpochMetrics::happy,        &EpochMetrics::surprise,  &EpochMetrics::od,    &EpochMetrics::ir,
            &EpochMetrics::rq,           &EpochMetrics::rr,        &EpochMetrics::in};
}

}  // namespace

const std::vector<std::string>& metrics_csv_columns() {
    static const std::vector<std::string> cols{"seed",  "epoch",   "success_rate", "avg_turns", "angry",
                                               "disgust", "happy", "surprise",     "od",        "ir",
                                               "rq",    "rr",      "in"};
    return cols;
}

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out;
    const auto& cols = metrics_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += '\n';
    for (const auto& row : rows) {
        out += row.seed + ',' + std::to_string(row.metrics.epoch);
        for (auto field : metric_fields()) out += ',' + format_double(row.metrics.*field);
        out += '\n';
    }
    return out;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("metrics CSV is empty");
    {
        std::vector<std::string> header;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
        if (header != metrics_csv_columns()) throw ConfigError("metrics CSV header does not match the expected columns");
    }
    std::vector<MetricsRow> rows;
    std::size_t line_no = 1;
    const auto fields = metric_fields();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != metrics_csv_columns().size()) {
            throw ConfigError("metrics CSV line " + std::to_string(line_no) + ": wrong number of cells");
        }
        MetricsRow row;
        row.seed = cells[0];
        row.metrics.epoch = static_cast<int>(parse_double(cells[1], line_no));
        for (std::size_t i = 0; i < fields.size(); ++i) row.metrics.*fields[i] = parse_double(cells[i + 2], line_no);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read metrics CSV: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_metrics_csv(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<MetricsRow> result_rows(const ExperimentResult& result, bool per_turn) {
    std::vector<MetricsRow> rows;
    auto pick = [per_turn](const EpochReport& r) { return per_turn ? r.per_turn : r.final_turn; };
    for (const auto& run : result.runs) {
        for (const auto& e : run.epochs) rows.push_back({std::to_string(run.seed), pick(e)});
    }
    for (const auto& e : result.average) rows.push_back({"avg", pick(e)});
    return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> success_curve(const std::vector<MetricsRow>& rows, const std::string& seed) {
    std::vector<std::pair<int, double>> points;
    for (const auto& r : rows) {
        if (r.seed == seed) points.emplace_back(r.metrics.epoch, r.metrics.success_rate);
    }
    std::stable_sort(points.begin(), points.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<double> curve;
    for (const auto& p : points) curve.push_back(p.second);
    return curve;
}

double compare_curves(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw UsageError("compare_curves needs two non-empty curves");
    const std::size_t n = std::min(a.size(), b.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

std::vector<RankedCurve> rank_curves(std::span<const double> reference,
                                     const std::vector<std::pair<std::string, std::vector<double>>>& candidates) {
    std::vector<RankedCurve> ranked;
    for (const auto& [label, curve] : candidates) ranked.push_back({label, compare_curves(reference, curve)});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedCurve& x, const RankedCurve& y) { return x.distance < y.distance; });
    return ranked;
}

// ---------------------------------------------------------------------------
// Charts

namespace {

struct Series {
    std::string name;
    std::string color;
    std::vector<double> ys;
};

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string line_chart_svg(const std::string& title, const std::vector<double>& xs, const std::vector<Series>& series,
                           double y_max) {
    constexpr double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    double x_min = xs.empty() ? 0 : xs.front(), x_max = xs.empty() ? 1 : xs.back();
    if (x_max <= x_min) x_max = x_min + 1;
    auto px = [&](double x) { return L + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return T + ph - std::clamp(y / y_max, 0.0, 1.0) * ph; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";
    s << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph << "\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\"/>\n";
    s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y_max * i / 4.0;
        s << "<text x=\"" << L - 6 << "\" y=\"" << fmt2(py(y) + 4) << "\" text-anchor=\"end\">" << fmt2(y)
          << "</text>\n";
        s << "<line x1=\"" << L << "\" y1=\"" << fmt2(py(y)) << "\" x2=\"" << L + pw << "\" y2=\"" << fmt2(py(y))
          << "\" stroke=\"#ddd\"/>\n";
    }
    s << "<text x=\"" << L << "\" y=\"" << T + ph + 18 << "\">" << fmt2(x_min) << "</text>\n";
    s << "<text x=\"" << L + pw << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"end\">" << fmt2(x_max)
      << "</text>\n";
    s << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">epoch</text>\n";
    s << "</g>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& sr = series[k];
        s << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < sr.ys.size() && i < xs.size(); ++i) {
            s << (i ? " " : "") << fmt2(px(xs[i])) << ',' << fmt2(py(sr.ys[i]));
        }
        s << "\"/>\n";
        const double ly = T + 14 + 18.0 * static_cast<double>(k);
        s << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32 << "\" y2=\"" << ly
          << "\" stroke=\"" << sr.color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << sr.name << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

const std::vector<std::string>& palette() {
    static const std::vector<std::string> p{"#d62728", "#8c564b", "#2ca02c", "#ff7f0e",
                                            "#1f77b4", "#9467bd", "#17becf", "#7f7f7f"};
    return p;
}

std::string safe_label(const std::string& label) {
    std::string out;
    for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return out;
}

}  // namespace

std::vector<std::filesystem::path> export_plots(const std::map<std::string, std::vector<EpochMetrics>>& settings,
                                                const std::filesystem::path& outdir) {
    std::vector<std::filesystem::path> written;
    if (settings.empty()) return written;
    for (const auto& [label, metrics] : settings) {
        std::vector<double> xs;
        for (const auto& m : metrics) xs.push_back(m.epoch);
        auto column = [&](double EpochMetrics::*f) {
            std::vector<double> ys;
            for (const auto& m : metrics) ys.push_back(m.*f);
            return ys;
        };
        const auto& c = palette();
        std::vector<Series> emotion{{"angry", c[0], column(&EpochMetrics::angry)},
                                    {"disgust", c[1], column(&EpochMetrics::disgust)},
                                    {"happy", c[2], column(&EpochMetrics::happy)},
                                    {"surprise", c[3], column(&EpochMetrics::surprise)}};
        std::vector<Series> triggers{{"OD", c[0], column(&EpochMetrics::od)},
                                     {"IR", c[1], column(&EpochMetrics::ir)},
                                     {"RQ", c[3], column(&EpochMetrics::rq)},
                                     {"RR", c[2], column(&EpochMetrics::rr)},
                                     {"IN", c[4], column(&EpochMetrics::in)}};
        const auto emotion_file = outdir / ("emotion_" + safe_label(label) + ".svg");
        const auto trigger_file = outdir / ("triggers_" + safe_label(label) + ".svg");
        write_text_file(emotion_file, line_chart_svg("Emotion intensity (" + label + ")", xs, emotion, 1.0));
        write_text_file(trigger_file, line_chart_svg("Trigger shares (" + label + ")", xs, triggers, 1.0));
        written.push_back(emotion_file);
        written.push_back(trigger_file);
    }
    return written;
}

void export_learning_curves(const std::vector<std::pair<std::string, std::vector<double>>>& curves,
                            const std::filesystem::path& file) {
    std::size_t n = 0;
    for (const auto& [label, c] : curves) n = std::max(n, c.size());
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(static_cast<double>(i + 1));
    std::vector<Series> series;
    for (std::size_t k = 0; k < curves.size(); ++k) {
        series.push_back({curves[k].first, palette()[k % palette().size()], curves[k].second});
    }
    write_text_file(file, line_chart_svg("Success rate", xs, series, 1.0));
}

}  // namespace affectsim
