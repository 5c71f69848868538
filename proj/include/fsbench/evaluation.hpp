#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "fsbench/dataset.hpp"
#include "fsbench/gsom.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

/// Per-class selection quality against ground truth.
///   SF  selected count
///   CSF selected and relevant for this class
///   NF  selected noise features (relevant for no class)
///   AF  selected features relevant only for other classes
struct FsClassMetrics {
    int class_id = 0;
    std::size_t sf = 0;
    std::size_t csf = 0;
    std::size_t nf = 0;
    std::size_t af = 0;
    double fs_accuracy = 0.0;
};

/// fs_accuracy = CSF / |truth|, or CSF / (|truth| + NF + AF) when anything
/// wrong was selected. Throws std::out_of_range for a selected index not
/// below `feature_count`, DataError if a class lacks a selection or truth.
std::vector<FsClassMetrics> fs_metrics(const std::map<int, FeatureSet>& selected, const RelevanceTruth& truth,
                                       std::size_t feature_count);

/// Same selection for every class (global filter output).
std::vector<FsClassMetrics> fs_metrics(const FeatureSet& selected, const RelevanceTruth& truth,
                                       std::size_t feature_count);

nlohmann::json to_json(const FsClassMetrics& m);

struct Split {
    Dataset train;
    Dataset test;
};

/// Stratified split: within each class the rows are shuffled and the first
/// round(train_fraction * n_c) go to training (at least one on each side
/// when the class has 2 or more samples).
Split stratified_split(const Dataset& d, double train_fraction, SeededRng& rng);

enum class Classifier { Som, Gsom };

const char* to_string(Classifier c);

struct ClassifyConfig {
    SomConfig som;
    GsomConfig gsom;
};

/// Trains the map on the selected columns of `train` (min-max normalised
/// with the training ranges, the same ranges applied to `test`), labels
/// nodes by majority training class and scores test samples by the label
/// of their BMU. A BMU that received no training sample lends the label of
/// the nearest labelled node instead. Throws std::invalid_argument on an
/// empty selection.
double classify_eval(Classifier classifier, const Dataset& train, const Dataset& test, const FeatureSet& selected,
                     const ClassifyConfig& config, SeededRng& rng);

struct TrialOutcome {
    std::uint64_t seed = 0;
    std::optional<double> value;
    std::string error;
};

/// Repeated-trial record. Failed trials keep their error text and are
/// excluded from mean and stddev (sample standard deviation, n - 1).
struct TrialSummary {
    std::string method;
    std::string dataset;
    std::vector<TrialOutcome> trials;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t failures = 0;

    std::vector<double> values() const;
    std::vector<std::uint64_t> seeds() const;
};

/// mean and n-1 standard deviation (0 for fewer than two values).
std::pair<double, double> mean_stddev(const std::vector<double>& v);

/// Runs task(seed) for seeds base_seed .. base_seed + trials - 1. Up to
/// `jobs` trials run at once; results are stored in seed order. A task
/// that throws marks its trial failed.
TrialSummary run_trials(const std::string& method, const std::string& dataset,
                        const std::function<double(std::uint64_t)>& task, int trials, std::uint64_t base_seed,
                        int jobs = 1);

nlohmann::json to_json(const TrialSummary& s);

/// Energy model inputs. Defaults follow the Green Algorithms reference
/// configuration (one core at 12 W, 4 GB at 0.3725 W/GB, PUE 1.67,
/// 475 gCO2e/kWh).
struct FootprintParams {
    double hours = 0.0;
    double cores = 1.0;
    double core_power_w = 12.0;
    double core_usage = 1.0;
    double memory_gb = 4.0;
    double memory_power_w_per_gb = 0.3725;
    double pue = 1.67;
    double carbon_intensity = 475.0;

    /// Throws std::invalid_argument on negative values, usage above 1 or PUE below 1.
    void validate() const;
};

nlohmann::json to_json(const FootprintParams& p);

/// E = t (n_c P_c u_c + n_m P_m) PUE / 1000, in kWh.
double energy_kwh(const FootprintParams& p);
/// C = E * CI, in gCO2e.
double carbon_g(double energy_kwh, double carbon_intensity);
/// Single expression for C from the parameters.
double carbon_fused_g(const FootprintParams& p);
/// Two-decimal display; anything at or below 0.005 g prints as "0.0".
std::string display_carbon(double grams);

struct FootprintReport {
    FootprintParams params;
    double energy_kwh = 0.0;
    double carbon_g = 0.0;
};

FootprintReport footprint_for(double seconds, FootprintParams params = {});
nlohmann::json to_json(const FootprintReport& r);

/// Peak resident set size of the process in bytes, from getrusage. This is
/// an approximation of the task's own peak: it is a process-wide high-water
/// mark.
std::size_t peak_memory_bytes();

template <typename T>
struct Timed {
    T result;
    double seconds = 0.0;
    std::size_t peak_memory_bytes = 0;  // approximate, process-wide
};

template <typename F>
auto timed(F&& f) -> Timed<std::invoke_result_t<F>> {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(r), s, peak_memory_bytes()};
}

/// One line of all_results.csv. Metric fields stay empty when the dataset
/// carries no truth; class_id 0 denotes a dataset-level row.
struct ResultRow {
    std::string dataset;
    std::string method;
    int class_id = 0;
    std::optional<FsClassMetrics> metrics;
    std::optional<double> clf_accuracy_mean;
    std::optional<double> clf_accuracy_std;
    double runtime_s = 0.0;
    double energy_kwh = 0.0;
    double co2_g = 0.0;
    std::uint64_t seed = 0;
};

extern const std::vector<std::string> kResultColumns;

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// Writes report/<dataset>/<method>/{trials,summary,footprint}.json under `root`.
void write_method_report(const std::filesystem::path& root, const std::string& dataset, const std::string& method,
                         const nlohmann::json& trials, const nlohmann::json& summary, const nlohmann::json& footprint);

/// Writes JSON with two-space indentation and a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace fsbench
