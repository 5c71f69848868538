#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsbench/dataset.hpp"
#include "fsbench/evaluation.hpp"
#include "fsbench/filters.hpp"
#include "fsbench/fwgsom.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

/// Selection methods: the four filters plus "fwgsom".
const std::vector<std::string>& fs_methods();
bool is_fs_method(const std::string& method);

struct MethodParams {
    SelectParams filter;
    FwgsomConfig fwgsom;
};

/// Output of one selection run. Filters give the same set to every class;
/// FWGSOM gives one set per class, and its `global` set comes from
/// class_votes.
struct MethodOutput {
    std::string method;
    std::map<int, FeatureSet> per_class;
    FeatureSet global;
    nlohmann::json json;
    double seconds = 0.0;
};

/// Dataset-level selection from per-class sets: feature f scores the
/// fraction of classes whose set holds f, and the mean-threshold rule picks
/// the features. When no score exceeds the mean every feature with a vote is
/// kept.
FeatureScores class_votes(const std::map<int, FeatureSet>& per_class, std::size_t features);

/// Runs a selection method on raw data (FWGSOM normalises internally).
MethodOutput run_method(const std::string& method, const Dataset& d, const MethodParams& params, SeededRng& rng);

/// Tag for the all-features reference rows of the classification suites.
inline constexpr const char* kAllFeatures = "all_features";

/// Suites: global, classlevel, interclass, realworld, footprint ("all" expands to every suite).
const std::vector<std::string>& bench_suites();

struct RealWorldInput {
    std::string name;
    std::filesystem::path csv;
    std::string label_column = "last";
};

struct BenchOptions {
    std::vector<std::string> suites;
    std::vector<std::string> methods;  // empty: every method
    int trials = 15;
    std::uint64_t base_seed = 0;
    int jobs = 1;
    std::filesystem::path out;
    MethodParams params;
    ClassifyConfig classify;
    FootprintParams footprint;
    std::vector<std::size_t> footprint_features{100, 250, 500, 1000};  // one trial per point
    std::vector<RealWorldInput> realworld;
    double train_fraction = 0.7;
    nlohmann::json run_config;  // embedded verbatim into the bundle
};

struct BenchResult {
    std::vector<ResultRow> rows;
    std::vector<TrialSummary> summaries;
    std::vector<std::string> notes;  // skipped suites and failed cells
};

/// Runs the suites, writes report/<dataset>/<method>/*.json, all_results.csv
/// and run_config.json under options.out, and returns what it wrote. Failed
/// trials are flagged, not fatal; only unwritable output throws.
BenchResult run_bench(const BenchOptions& options);

/// Seeds for the parts of one trial, all derived from the trial seed.
struct TrialSeeds {
    std::uint64_t data;
    std::uint64_t method;
    std::uint64_t split;
    std::uint64_t classifier;
};
TrialSeeds trial_seeds(std::uint64_t trial_seed);

}  // namespace fsbench
