#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "affectsim/errors.hpp"
#include "affectsim/experiment.hpp"

using namespace affectsim;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const DomainAssets> movie() {
    static auto assets = load_domain(std::string(AFFECTSIM_DATA_DIR) + "/movie");
    return assets;
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.personality = Personality({0.8, 0.6, 0.4, 0.7, 0.3});
    c.profile = load_profile(std::string(AFFECTSIM_DATA_DIR) + "/profiles/movie.json");
    c.epochs = 3;
    c.dialogues_per_epoch = 10;
    c.seeds = {1, 2};
    c.dqn.warm_start_dialogues = 5;
    c.dqn.train_batches_per_epoch = 5;
    c.threads = 2;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("metrics CSV round trip") {
    std::vector<MetricsRow> rows;
    for (int e = 1; e <= 4; ++e) {
        EpochMetrics m;
        m.epoch = e;
        m.success_rate = 0.1 * e;
        m.avg_turns = 12.0 / 7.0 * e;
        m.angry = 1.0 / 3.0;
        m.disgust = 1e-17;
        m.happy = 0.25;
        m.surprise = 0.0;
        m.od = 0.2;
        m.ir = 0.1;
        m.rq = 0.3;
        m.rr = 0.15;
        m.in = 0.25;
        rows.push_back({e % 2 ? "7" : "avg", m});
    }
    const auto text = format_metrics_csv(rows);
    CHECK(text.rfind("seed,epoch,success_rate,avg_turns,angry,disgust,happy,surprise,od,ir,rq,rr,in\n", 0) == 0);
    CHECK(parse_metrics_csv(text) == rows);
    CHECK(format_metrics_csv(parse_metrics_csv(text)) == text);
    CHECK(success_curve(rows, "avg") == std::vector<double>{0.2, 0.4});
    CHECK_THROWS_AS(parse_metrics_csv("seed,epoch\n1,2\n"), ConfigError);
}

TEST_CASE("compare_curves and rank_curves") {
    const std::vector<double> a{0.1, 0.2, 0.4}, b{0.2, 0.2, 0.4, 0.9};
    CHECK(compare_curves(a, a) == 0.0);
    CHECK(compare_curves(a, b) == doctest::Approx(std::sqrt(0.01 / 3)));
    CHECK_THROWS_AS(compare_curves(a, std::vector<double>{}), UsageError);

    Rng rng(4);
    std::vector<double> ref(20);
    for (auto& x : ref) x = rng.uniform();
    std::vector<std::pair<std::string, std::vector<double>>> cands;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> c(10 + rng.index(15));
        for (auto& x : c) x = rng.uniform();
        cands.emplace_back("c" + std::to_string(i), c);
    }
    cands.emplace_back("dup", cands[3].second);
    const auto ranked = rank_curves(ref, cands);
    REQUIRE(ranked.size() == cands.size());
    // brute force: distance by hand and a stable sort
    std::vector<std::pair<double, std::size_t>> brute;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i].second;
        const std::size_t n = std::min(ref.size(), c.size());
        double s = 0;
        for (std::size_t k = 0; k < n; ++k) s += (ref[k] - c[k]) * (ref[k] - c[k]);
        brute.emplace_back(std::sqrt(s / n), i);
    }
    std::stable_sort(brute.begin(), brute.end(), [](auto& x, auto& y) { return x.first < y.first; });
    for (std::size_t i = 0; i < brute.size(); ++i) {
        CHECK(ranked[i].label == cands[brute[i].second].first);
        CHECK(ranked[i].distance == doctest::Approx(brute[i].first).epsilon(1e-12));
    }
}

TEST_CASE("run_dialogue emits one transition per agent decision") {
    const auto profile = load_profile(std::string(AFFECTSIM_DATA_DIR) + "/profiles/movie.json");
    UserSimulator user(movie(), Personality({0.5, 0.5, 0.5, 0.5, 0.5}), profile, 40, 9);
    RuleAgent agent(movie()->schema, movie()->kb);
    std::vector<Transition> ts;
    const auto out = run_dialogue(agent, user, [&](Transition t) { ts.push_back(std::move(t)); });
    CHECK(static_cast<int>(ts.size()) == out.turns);
    CHECK(out.agent_acts.size() == ts.size());
    CHECK(out.user_acts.size() == ts.size() + 1);
    REQUIRE_FALSE(ts.empty());
    CHECK(ts.back().terminal);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        CHECK_FALSE(ts[i].terminal);
        CHECK(ts[i].reward == -1.0);
        CHECK(ts[i].next_state == ts[i + 1].state);
    }
}

TEST_CASE("experiments are deterministic and write identical files") {
    auto config = small_config();
    const auto dir = fs::temp_directory_path() / "affectsim_experiment_test";
    fs::remove_all(dir);
    config.out_dir = dir / "a";
    const auto r1 = run_experiment(config, movie());
    config.out_dir = dir / "b";
    config.threads = 1;
    const auto r2 = run_experiment(config, movie());
    REQUIRE(r1.runs.size() == 2);
    CHECK(r1.average.size() == 3);
    for (std::size_t i = 0; i < r1.runs.size(); ++i)
        for (std::size_t e = 0; e < 3; ++e) CHECK(r1.runs[i].epochs[e].final_turn == r2.runs[i].epochs[e].final_turn);
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    CHECK(slurp(dir / "a" / "metrics_per_turn.csv") == slurp(dir / "b" / "metrics_per_turn.csv"));
    const auto rows = read_metrics_csv(dir / "a" / "metrics.csv");
    CHECK(rows.size() == 3 * 3);

    const auto avg = average_curves(r1.runs);
    for (std::size_t e = 0; e < 3; ++e) {
        const double mean = (r1.runs[0].epochs[e].final_turn.success_rate + r1.runs[1].epochs[e].final_turn.success_rate) / 2;
        CHECK(avg[e].final_turn.success_rate == doctest::Approx(mean).epsilon(1e-15));
        const auto& m = r1.runs[0].epochs[e].final_turn;
        const double shares = m.od + m.ir + m.rq + m.rr + m.in;
        CHECK((shares == 0.0 || std::abs(shares - 1.0) < 1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("export_plots writes deterministic SVGs") {
    const auto dir = fs::temp_directory_path() / "affectsim_plot_test";
    fs::remove_all(dir);
    CHECK(export_plots({}, dir).empty());
    std::vector<EpochMetrics> curve(5);
    for (int i = 0; i < 5; ++i) {
        curve[i].epoch = i + 1;
        curve[i].angry = 0.1 * i;
        curve[i].od = 0.2;
    }
    const auto files = export_plots({{"uA", curve}, {"uB", curve}}, dir / "one");
    CHECK(files.size() == 4);
    const auto again = export_plots({{"uA", curve}, {"uB", curve}}, dir / "two");
    REQUIRE(again.size() == files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        CHECK(files[i].filename() == again[i].filename());
        const auto text = slurp(files[i]);
        CHECK(text == slurp(again[i]));
        CHECK(text.find("<svg") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("config validation") {
    auto c = small_config();
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
