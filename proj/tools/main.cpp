// fsbench command-line front end: gen, select, bench, footprint.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsbench/bench.hpp"
#include "fsbench/dataset.hpp"
#include "fsbench/evaluation.hpp"
#include "fsbench/synth.hpp"

namespace fs = std::filesystem;
using namespace fsbench;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_out() {
    const char* env = std::getenv("FSBENCH_OUT");
    return env && *env ? fs::path(env) : fs::path("fsbench-out");
}

std::uint64_t draw_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct GenArgs {
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t features = 0;
};

struct SelectArgs {
    std::string method;
    std::string data;
    std::string truth;
    std::string label_column = "last";
    std::optional<std::uint64_t> seed;
    std::string out;
    int bins = 10;
    int k = 10;
    std::optional<std::size_t> top_k;
    int max_iter = 10;
    double target_accuracy = 1.0;
    std::string policy = "binary";
    double attenuation = 0.5;
};

struct BenchArgs {
    std::vector<std::string> suites{"all"};
    std::vector<std::string> methods;
    int trials = 15;
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 1;
    std::vector<std::string> data;
    std::string label_column = "last";
    std::vector<std::size_t> footprint_features{100, 250, 500, 1000};
};

void add_footprint_options(CLI::App* app, FootprintParams& p, bool with_time) {
    if (with_time) {
        app->add_option("--t", p.hours, "runtime in hours");
    }
    app->add_option("--nc", p.cores, "number of cores");
    app->add_option("--pc", p.core_power_w, "power draw per core (W)");
    app->add_option("--uc", p.core_usage, "core usage factor in [0,1]");
    app->add_option("--nm", p.memory_gb, "memory (GB)");
    app->add_option("--pm", p.memory_power_w_per_gb, "memory power draw (W/GB)");
    app->add_option("--pue", p.pue, "power usage effectiveness, >= 1");
    app->add_option("--ci", p.carbon_intensity, "carbon intensity (gCO2e/kWh)");
}

MethodParams method_params(const SelectArgs& a) {
    MethodParams p;
    p.filter.bins = a.bins;
    p.filter.k_neighbors = a.k;
    p.filter.top_k = a.top_k;
    p.fwgsom.max_iterations = a.max_iter;
    p.fwgsom.target_accuracy = a.target_accuracy;
    p.fwgsom.policy = a.policy == "attenuate" ? WeightingPolicy::Attenuate : WeightingPolicy::Binary;
    p.fwgsom.attenuation = a.attenuation;
    return p;
}

int cmd_gen(const GenArgs& a) {
    if (!is_preset(a.preset)) {
        throw UsageError("unknown preset '" + a.preset + "'");
    }
    const auto seed = a.seed.value_or(draw_seed());
    if (!a.seed) {
        std::cerr << "seed not given, using " << seed << "\n";
    }
    SeededRng rng(seed);
    const auto data = make_preset(a.preset, rng, a.features);
    const fs::path dir = a.out.empty() ? default_out() : fs::path(a.out);
    fs::create_directories(dir);
    save_csv(data.data, dir / (a.preset + ".csv"));
    save_truth(data.truth, dir / (a.preset + ".truth.json"));
    auto cfg = data.config;
    cfg["seed"] = seed;
    cfg["rng"] = SeededRng::kAlgorithm;
    write_json(cfg, dir / (a.preset + ".config.json"));
    std::cout << (dir / (a.preset + ".csv")).string() << "\n";
    return kOk;
}

int cmd_select(const SelectArgs& a) {
    if (!is_fs_method(a.method)) {
        throw UsageError("unknown method '" + a.method + "'");
    }
    const auto seed = a.seed.value_or(draw_seed());
    const Dataset d = load_csv(a.data, a.label_column);
    SeededRng rng(seed);
    const auto out = run_method(a.method, d, method_params(a), rng);
    auto j = out.json;
    j["seed"] = seed;
    j["data"] = a.data;
    if (!a.truth.empty()) {
        const auto truth = load_truth(a.truth);
        truth.validate(d);
        auto mj = nlohmann::json::array();
        for (const auto& m : fs_metrics(out.per_class, truth, d.features())) {
            mj.push_back(to_json(m));
        }
        j["metrics"] = mj;
    }
    if (!a.out.empty()) {
        write_json(j, a.out);
    }
    std::cout << j.dump(2) << "\n";
    return kOk;
}

int cmd_bench(const BenchArgs& a, const nlohmann::json& run_config) {
    if (!a.seed) {
        throw UsageError("bench requires --seed");
    }
    BenchOptions o;
    o.suites = a.suites;
    o.methods = a.methods;
    o.trials = a.trials;
    o.base_seed = *a.seed;
    o.jobs = a.jobs;
    o.out = a.out.empty() ? default_out() : fs::path(a.out);
    o.footprint_features = a.footprint_features;
    for (const auto& p : a.data) {
        o.realworld.push_back({fs::path(p).stem().string(), p, a.label_column});
    }
    o.run_config = run_config;
    const auto r = run_bench(o);
    for (const auto& n : r.notes) {
        std::cerr << "note: " << n << "\n";
    }
    std::cout << (o.out / "all_results.csv").string() << " (" << r.rows.size() << " rows)\n";
    return kOk;
}

int cmd_footprint(const FootprintParams& p) {
    p.validate();
    const double e = energy_kwh(p);
    const double c = carbon_g(e, p.carbon_intensity);
    std::printf("energy_kwh %.17g\nco2_g %.17g\nenergy_kwh_display %.5f\nco2_g_display %s\n", e, c, e,
                display_carbon(c).c_str());
    return kOk;
}

// Effective settings of the subcommand that ran, for embedding in outputs.
nlohmann::json config_of(const CLI::App* sub) {
    nlohmann::json j = {{"command", sub->get_name()}};
    for (const auto* opt : sub->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "--config" || opt->count() == 0) {
            continue;
        }
        const auto& res = opt->results();
        j[opt->get_name().substr(opt->get_name().find_first_not_of('-'))] =
            res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FWGSOM and filter feature-selection benchmark"};
    app.require_subcommand(1);
    // Keys go under a [gen], [select], [bench] or [footprint] section;
    // command-line flags override the file.
    app.set_config("--config", "", "key=value file supplying any flag");
    app.fallthrough();

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "write a synthetic preset as CSV + truth JSON");
    g->add_option("--preset", gen.preset, "d1 d2 d3 d4 moons circles blobs blobs-xl")->required();
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out, "output directory (default $FSBENCH_OUT or ./fsbench-out)");
    g->add_option("--features", gen.features, "feature count for blobs-xl");

    SelectArgs sel;
    auto* s = app.add_subcommand("select", "run one selection method on a CSV");
    s->add_option("--method", sel.method, "pearson mi fscore relieff fwgsom")->required();
    s->add_option("--data", sel.data)->required()->check(CLI::ExistingFile);
    s->add_option("--truth", sel.truth)->check(CLI::ExistingFile);
    s->add_option("--label-column", sel.label_column);
    s->add_option("--seed", sel.seed);
    s->add_option("--out", sel.out, "also write the result JSON here");
    s->add_option("--bins", sel.bins)->check(CLI::Range(2, 1 << 20));
    s->add_option("--k", sel.k, "ReliefF neighbours")->check(CLI::PositiveNumber);
    s->add_option("--top-k", sel.top_k)->check(CLI::PositiveNumber);
    s->add_option("--max-iter", sel.max_iter)->check(CLI::PositiveNumber);
    s->add_option("--target-accuracy", sel.target_accuracy)->check(CLI::Range(1e-12, 1.0));
    s->add_option("--policy", sel.policy)->check(CLI::IsMember({"binary", "attenuate"}));
    s->add_option("--attenuation", sel.attenuation)->check(CLI::Range(0.0, 1.0));

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "run benchmark suites and write a report bundle");
    b->add_option("--suite", bench.suites, "global classlevel interclass realworld footprint all")
        ->check(CLI::IsMember({"global", "classlevel", "interclass", "realworld", "footprint", "all"}));
    b->add_option("--methods", bench.methods)->check(CLI::IsMember(fs_methods()));
    b->add_option("--trials", bench.trials)->check(CLI::PositiveNumber);
    b->add_option("--seed", bench.seed, "base seed (required)");
    b->add_option("--out", bench.out);
    b->add_option("--jobs", bench.jobs, "concurrent trials")->check(CLI::PositiveNumber);
    b->add_option("--data", bench.data, "CSV files for the realworld suite")->check(CLI::ExistingFile);
    b->add_option("--label-column", bench.label_column);
    b->add_option("--footprint-features", bench.footprint_features)->check(CLI::Range(6, 1 << 20));

    FootprintParams fp;
    auto* f = app.add_subcommand("footprint", "energy and carbon for given parameters");
    add_footprint_options(f, fp, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (g->parsed()) {
            return cmd_gen(gen);
        }
        if (s->parsed()) {
            return cmd_select(sel);
        }
        if (b->parsed()) {
            return cmd_bench(bench, config_of(b));
        }
        return cmd_footprint(fp);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
}
