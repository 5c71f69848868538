#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsbench/dataset.hpp"

namespace fsbench {

/// Per-feature scores from one filter method.
///
/// For the default rule `selected` is exactly {f : scores[f] > threshold}
/// with threshold = mean(scores). With a top-k override `selected` holds the
/// k best scores instead and `top_k` records k.
struct FeatureScores {
    std::string method;
    std::vector<double> scores;
    double threshold = 0.0;
    FeatureSet selected;
    std::optional<std::size_t> top_k;
    std::map<int, std::vector<double>> per_class;  // one-vs-rest, by class id
    double runtime_seconds = 0.0;
};

/// Degenerate variances are floored here and scores capped at kScoreCap.
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kScoreCap = 1e12;

/// Pearson correlation of x and y; 0 when either is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// |rho(feature, numeric label)|.
FeatureScores pearson_scores(const Dataset& d, bool per_class = true);

/// Equal-frequency discretisation into at most `bins` codes 0..b-1. Equal
/// values always share a code, so the result depends only on ranks.
std::vector<int> equal_frequency_bins(std::span<const double> values, int bins);

/// Shannon entropy in nats of a discrete sample.
double entropy(std::span<const int> y);
/// H(Y | X) in nats.
double conditional_entropy(std::span<const int> y, std::span<const int> x);
/// Joint-table form: sum p(x,y) ln(p(x,y) / (p(x) p(y))).
double mutual_information_joint(std::span<const int> x, std::span<const int> y);
/// Entropy-difference form: H(Y) - H(Y | X).
double mutual_information_entropy(std::span<const int> x, std::span<const int> y);

/// Throws std::invalid_argument when bins < 2.
FeatureScores mutual_information_scores(const Dataset& d, int bins = 10, bool per_class = true);

/// F-score of one feature between a positive and a negative group.
/// Throws std::invalid_argument when either group has fewer than 2 values.
double f_score(std::span<const double> positive, std::span<const double> negative);

/// One-vs-rest F-score per class; the global score is the mean over classes.
FeatureScores f_scores(const Dataset& d);

/// ReliefF over every sample (no sampling), k nearest hits and k nearest
/// misses per other class, Euclidean distance on min-max normalised data.
/// Miss contributions are weighted by P(c) / (1 - P(class of the sample)).
/// Neighbour ties go to the lower row index. Throws DataError on data with
/// a single class.
FeatureScores relieff_scores(const Dataset& d, int k_neighbors = 10, bool per_class = true);

struct SelectParams {
    int bins = 10;
    int k_neighbors = 10;
    std::optional<std::size_t> top_k;
    bool per_class = true;
};

/// Method ids: pearson, mi, fscore, relieff.
const std::vector<std::string>& filter_methods();
bool is_filter_method(const std::string& method);

/// Dispatches to a scorer, applies the selection rule and records runtime.
/// Throws std::invalid_argument on an unknown method.
FeatureScores select(const std::string& method, const Dataset& d, const SelectParams& params = {});

/// Recomputes `threshold` and `selected` from `scores`.
void apply_selection_rule(FeatureScores& s, std::optional<std::size_t> top_k = std::nullopt);

nlohmann::json to_json(const FeatureScores& s);

}  // namespace fsbench
