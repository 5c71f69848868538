#include "fsbench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>

#include "fsbench/synth.hpp"

namespace fsbench {

namespace {

nlohmann::json one_based(const FeatureSet& s) {
    auto a = nlohmann::json::array();
    for (auto f : s) {
        a.push_back(f + 1);
    }
    return a;
}

}  // namespace

const std::vector<std::string>& fs_methods() {
    static const std::vector<std::string> names{"pearson", "mi", "fscore", "relieff", "fwgsom"};
    return names;
}

bool is_fs_method(const std::string& method) {
    const auto& m = fs_methods();
    return std::find(m.begin(), m.end(), method) != m.end();
}

FeatureScores class_votes(const std::map<int, FeatureSet>& per_class, std::size_t features) {
    FeatureScores v;
    v.method = "fwgsom";
    v.scores.assign(features, 0.0);
    for (const auto& [c, set] : per_class) {
        (void)c;
        for (auto f : set) {
            v.scores[f] += 1.0 / static_cast<double>(per_class.size());
        }
    }
    apply_selection_rule(v);
    if (v.selected.empty()) {
        // Equal votes everywhere: keep whatever any class kept.
        for (std::size_t f = 0; f < features; ++f) {
            if (v.scores[f] > 0.0) {
                v.selected.insert(f);
            }
        }
    }
    return v;
}

MethodOutput run_method(const std::string& method, const Dataset& d, const MethodParams& params, SeededRng& rng) {
    MethodOutput out;
    out.method = method;
    const auto t0 = std::chrono::steady_clock::now();
    if (method == "fwgsom") {
        const auto result = fwgsom_run(normalize_min_max(d), params.fwgsom, rng);
        out.per_class = result.relevant;
        out.json = to_json(result);
        const auto votes = class_votes(result.relevant, d.features());
        out.global = votes.selected;
        out.json["global"] = {{"votes", votes.scores}, {"threshold", votes.threshold}, {"selected", one_based(votes.selected)}};
    } else if (is_filter_method(method)) {
        const auto scores = select(method, d, params.filter);
        for (int c = 1; c <= d.num_classes(); ++c) {
            out.per_class[c] = scores.selected;
        }
        out.global = scores.selected;
        out.json = to_json(scores);
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.json["runtime_seconds"] = out.seconds;
    return out;
}

const std::vector<std::string>& bench_suites() {
    static const std::vector<std::string> names{"global", "classlevel", "interclass", "realworld", "footprint"};
    return names;
}

TrialSeeds trial_seeds(std::uint64_t trial_seed) {
    const SeededRng base(trial_seed);
    return {base.derive(0).seed(), base.derive(1).seed(), base.derive(2).seed(), base.derive(3).seed()};
}

namespace {

struct Source {
    Dataset data;
    std::optional<RelevanceTruth> truth;
};

using SourceFn = std::function<Source(std::uint64_t data_seed)>;

// Per-trial detail kept alongside the scalar trial value.
struct Detail {
    std::vector<FsClassMetrics> metrics;
    std::map<int, FeatureSet> selected;
    std::optional<double> clf_accuracy;
    double seconds = 0.0;
};

enum class Scoring { FsAccuracy, Classification };

class Runner {
public:
    explicit Runner(const BenchOptions& o) : o_(o) {}

    // One dataset x method cell over all trials.
    void cell(const std::string& dataset, const std::string& method, const SourceFn& source, Scoring scoring,
              Classifier classifier, const MethodParams& params, int trials) {
        std::vector<Detail> details(static_cast<std::size_t>(trials));
        auto task = [&](std::uint64_t seed) {
            const auto seeds = trial_seeds(seed);
            auto& det = details[static_cast<std::size_t>(seed - o_.base_seed)];
            const Source src = source(seeds.data);
            Dataset fs_data = src.data;
            std::optional<Split> split;
            if (scoring == Scoring::Classification) {
                SeededRng split_rng(seeds.split);
                split = stratified_split(src.data, o_.train_fraction, split_rng);
                fs_data = split->train;
            }
            FeatureSet chosen;
            if (method == kAllFeatures) {
                for (std::size_t f = 0; f < src.data.features(); ++f) {
                    chosen.insert(f);
                }
                for (int c = 1; c <= src.data.num_classes(); ++c) {
                    det.selected[c] = chosen;
                }
            } else {
                SeededRng rng(seeds.method);
                const auto out = run_method(method, fs_data, params, rng);
                det.selected = out.per_class;
                det.seconds = out.seconds;
                chosen = out.global;
            }
            if (src.truth) {
                det.metrics = fs_metrics(det.selected, *src.truth, src.data.features());
            }
            if (scoring == Scoring::FsAccuracy) {
                if (!src.truth) {
                    throw DataError("dataset has no truth to score selections against");
                }
                double sum = 0.0;
                for (const auto& m : det.metrics) {
                    sum += m.fs_accuracy;
                }
                return sum / static_cast<double>(det.metrics.size());
            }
            SeededRng clf_rng(seeds.classifier);
            det.clf_accuracy = classify_eval(classifier, split->train, split->test, chosen, o_.classify, clf_rng);
            return *det.clf_accuracy;
        };
        auto summary = run_trials(method, dataset, task, trials, o_.base_seed, o_.jobs);

        std::vector<double> secs;
        std::vector<double> clf;
        auto trial_json = nlohmann::json::array();
        for (std::size_t i = 0; i < details.size(); ++i) {
            const auto& t = summary.trials[i];
            const auto& det = details[i];
            nlohmann::json j = {{"seed", t.seed}, {"runtime_seconds", det.seconds}};
            j["value"] = t.value ? nlohmann::json(*t.value) : nlohmann::json(nullptr);
            if (!t.value) {
                j["error"] = t.error;
            }
            nlohmann::json sel = nlohmann::json::object();
            for (const auto& [c, s] : det.selected) {
                sel[std::to_string(c)] = one_based(s);
            }
            j["selected"] = sel;
            auto mj = nlohmann::json::array();
            for (const auto& m : det.metrics) {
                mj.push_back(to_json(m));
            }
            j["metrics"] = mj;
            if (det.clf_accuracy) {
                j["clf_accuracy"] = *det.clf_accuracy;
                clf.push_back(*det.clf_accuracy);
            }
            trial_json.push_back(j);
            if (t.value) {
                secs.push_back(det.seconds);
            }
        }
        const auto [rt_mean, rt_std] = mean_stddev(secs);
        (void)rt_std;
        const auto fp = footprint_for(rt_mean, o_.footprint);
        std::optional<double> clf_mean, clf_std;
        if (!clf.empty()) {
            const auto [m, s] = mean_stddev(clf);
            clf_mean = m;
            clf_std = s;
        }

        auto sj = to_json(summary);
        sj.erase("trials");
        sj["values"] = summary.values();
        sj["seeds"] = summary.seeds();
        sj["value_kind"] = scoring == Scoring::FsAccuracy ? "fs_accuracy" : std::string("clf_accuracy_") + to_string(classifier);
        sj["runtime_mean_seconds"] = rt_mean;
        nlohmann::json fj = to_json(fp);
        fj["runtime_mean_seconds"] = rt_mean;
        write_method_report(o_.out / "report", dataset, method, trial_json, sj, fj);

        for (std::size_t i = 0; i < details.size(); ++i) {
            const auto& t = summary.trials[i];
            if (!t.value) {
                continue;
            }
            const auto& det = details[i];
            const auto f = footprint_for(det.seconds, o_.footprint);
            auto base = ResultRow{dataset, method, 0, std::nullopt, clf_mean, clf_std,
                                  det.seconds, f.energy_kwh, f.carbon_g, t.seed};
            if (det.metrics.empty()) {
                result_.rows.push_back(base);
            }
            for (const auto& m : det.metrics) {
                auto row = base;
                row.class_id = m.class_id;
                row.metrics = m;
                result_.rows.push_back(row);
            }
        }
        if (summary.failures) {
            result_.notes.push_back(dataset + "/" + method + ": " + std::to_string(summary.failures) +
                                    " failed trial(s), first error: " + first_error(summary));
        }
        result_.summaries.push_back(std::move(summary));
    }

    BenchResult& result() { return result_; }

private:
    static std::string first_error(const TrialSummary& s) {
        for (const auto& t : s.trials) {
            if (!t.value) {
                return t.error;
            }
        }
        return {};
    }

    const BenchOptions& o_;
    BenchResult result_;
};

SourceFn preset_source(const std::string& name, std::size_t features = 0) {
    return [name, features](std::uint64_t seed) {
        SeededRng rng(seed);
        auto s = make_preset(name, rng, features);
        return Source{std::move(s.data), std::move(s.truth)};
    };
}

SourceFn shape_source(ShapeOptions opts) {
    return [opts](std::uint64_t seed) {
        SeededRng rng(seed);
        auto s = gen_shapes(opts, rng);
        return Source{std::move(s.data), std::move(s.truth)};
    };
}

std::vector<std::string> expand_suites(const std::vector<std::string>& suites) {
    std::vector<std::string> out;
    for (const auto& s : suites) {
        if (s == "all") {
            return bench_suites();
        }
        if (std::find(bench_suites().begin(), bench_suites().end(), s) == bench_suites().end()) {
            throw std::invalid_argument("unknown suite '" + s + "'");
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace

BenchResult run_bench(const BenchOptions& o) {
    if (o.trials < 1) {
        throw std::invalid_argument("trials must be >= 1");
    }
    const auto suites = expand_suites(o.suites);
    const auto methods = o.methods.empty() ? fs_methods() : o.methods;
    for (const auto& m : methods) {
        if (!is_fs_method(m)) {
            throw std::invalid_argument("unknown method '" + m + "'");
        }
    }
    std::filesystem::create_directories(o.out);
    Runner run(o);
    const auto& P = o.params;

    for (const auto& suite : suites) {
        if (suite == "global") {
            std::vector<std::pair<std::string, SourceFn>> sets{{"d1", preset_source("d1")}};
            for (double level : {0.0, 30.0, 200.0}) {
                const auto tag = "-" + std::to_string(static_cast<int>(level));
                sets.emplace_back("moons" + tag, shape_source({Shape::Moons, 2500, 18, level}));
                sets.emplace_back("circles" + tag, shape_source({Shape::Circles, 1750, 18, level}));
                sets.emplace_back("blobs" + tag, shape_source({Shape::Blobs, 1385, 14, level, 4, 6}));
            }
            for (const auto& [name, src] : sets) {
                for (const auto& m : methods) {
                    run.cell(name, m, src, Scoring::FsAccuracy, Classifier::Gsom, P, o.trials);
                }
            }
        } else if (suite == "classlevel") {
            for (const std::string name : {"d2", "d3"}) {
                for (const auto& m : methods) {
                    run.cell(name, m, preset_source(name), Scoring::FsAccuracy, Classifier::Gsom, P, o.trials);
                }
            }
        } else if (suite == "interclass") {
            auto all = methods;
            all.push_back(kAllFeatures);
            for (const auto& m : all) {
                run.cell("d4", m, preset_source("d4"), Scoring::Classification, Classifier::Gsom, P, o.trials);
            }
        } else if (suite == "realworld") {
            if (o.realworld.empty()) {
                run.result().notes.push_back("realworld: no --data CSV supplied, suite skipped");
                continue;
            }
            auto all = methods;
            all.push_back(kAllFeatures);
            for (const auto& in : o.realworld) {
                const auto data = load_csv(in.csv, in.label_column);
                SourceFn src = [data](std::uint64_t) { return Source{data, std::nullopt}; };
                for (const auto& m : all) {
                    run.cell(in.name, m, src, Scoring::Classification, Classifier::Som, P, o.trials);
                }
            }
        } else if (suite == "footprint") {
            // Timing only needs the global scores, so the one-vs-rest extras are off.
            MethodParams fp = P;
            fp.filter.per_class = false;
            for (auto features : o.footprint_features) {
                const auto name = "blobs-xl-" + std::to_string(features);
                for (const auto& m : methods) {
                    run.cell(name, m, preset_source("blobs-xl", features), Scoring::FsAccuracy, Classifier::Gsom, fp,
                             1);
                }
            }
        }
    }

    auto& result = run.result();
    write_results_csv(result.rows, o.out / "all_results.csv");
    nlohmann::json cfg = o.run_config;
    cfg["notes"] = result.notes;
    write_json(cfg, o.out / "run_config.json");
    return std::move(result);
}

}  // namespace fsbench
