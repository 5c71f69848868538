#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fsbench/dataset.hpp"
#include "fsbench/gsom.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

/// Partition of the map's nodes with respect to one class.
///   lead:        node holding most of the class's samples (lowest index on ties)
///   associates:  other nodes holding at least one sample of the class
///   dissociates: nodes holding none
struct ClassNodeRoles {
    int class_id = 0;
    std::size_t lead = 0;
    std::vector<std::size_t> associates;
    std::vector<std::size_t> dissociates;
};

ClassNodeRoles class_roles(const HitMatrix& hits, int class_id);

/// Per-node, per-feature absolute distances plus their variance across nodes.
struct FeatureSpread {
    std::vector<std::size_t> nodes;          // row order of `distances`
    std::vector<std::vector<double>> distances;
    std::vector<double> variance;            // population variance over rows
};

/// Rows for the lead and each associate m:
///   |mean of class samples mapped to m - lead weights|, per feature.
/// The lead row comes first. With no associates the variance is all zeros.
FeatureSpread similarity_matrix(const Network& net, const Dataset& d, std::span<const std::size_t> assignment,
                                const ClassNodeRoles& roles);

/// Rows for each dissociate m:
///   |mean of class samples mapped to the lead - m weights|, per feature.
/// Returns nullopt when the class has no dissociate node (every node holds
/// some of its samples), i.e. the class is not separable on this map.
std::optional<FeatureSpread> dissimilarity_matrix(const Network& net, const Dataset& d,
                                                  std::span<const std::size_t> assignment,
                                                  const ClassNodeRoles& roles);

struct PercentageChange {
    std::vector<double> delta;
    FeatureSet relevant;  // exactly { f : delta[f] > 0 }
};

/// delta[f] = 100 * (dis_var[f] - sim_var[f]) / max(sim_var[f], epsilon).
PercentageChange percentage_change(std::span<const double> sim_var, std::span<const double> dis_var,
                                   double epsilon = 1e-12);

enum class WeightingPolicy { Binary, Attenuate };

/// Sets the mask of the lead and associate nodes: binary policy writes 1 for
/// relevant and 0 for other features; attenuation multiplies the mask of
/// non-relevant features by `attenuation`. Dissociates are left alone. An
/// empty relevant set is ignored with a warning.
void apply_weights(Network& net, const ClassNodeRoles& roles, const FeatureSet& relevant,
                   WeightingPolicy policy = WeightingPolicy::Binary, double attenuation = 0.5);

/// Majority-class node labelling; node_labels[j] is 0 for empty nodes.
struct DiagnosisAccuracy {
    std::vector<double> per_class;  // index k-1 for class k
    double overall = 0.0;
    std::vector<int> node_labels;
};

DiagnosisAccuracy diagnosis_accuracy(const HitMatrix& hits);

struct FwgsomConfig {
    int max_iterations = 10;
    double target_accuracy = 1.0;
    WeightingPolicy policy = WeightingPolicy::Binary;
    double attenuation = 0.5;
    double epsilon = 1e-12;
    GsomConfig gsom;
};

enum class ClassStatus {
    Initial,       // before any analysis: all features kept
    Evaluated,     // similarity/dissimilarity computed, mask applied
    NoAssociates,  // class sits on its lead node alone; previous set kept
    NotSeparable,  // no dissociate node; all features kept this round
};

const char* to_string(ClassStatus s);

struct ClassRecord {
    int class_id = 0;
    ClassStatus status = ClassStatus::Initial;
    std::vector<double> delta;  // empty unless Evaluated
    FeatureSet relevant;
    double accuracy = 0.0;
};

struct IterationRecord {
    int iteration = 0;  // 1-based; entry 1 is the freshly trained map
    std::vector<ClassRecord> classes;
    double overall_accuracy = 0.0;
    HitMatrix hits;
};

struct FwgsomResult {
    Network network;
    std::map<int, FeatureSet> relevant;
    std::map<int, std::vector<double>> delta;  // last percentage-change evaluation per class
    std::vector<double> class_accuracy;
    double overall_accuracy = 0.0;
    std::vector<IterationRecord> trace;
    std::uint64_t seed = 0;

    int iterations() const { return static_cast<int>(trace.size()); }
};

/// Trains a GSOM, then alternates relevance analysis, mask updates and BMU
/// re-evaluation until the diagnosis accuracy reaches the target or the
/// trace holds max_iterations entries.
FwgsomResult fwgsom_run(const Dataset& d, const FwgsomConfig& config, SeededRng& rng);

nlohmann::json to_json(const FwgsomResult& r, bool include_hits = false);

}  // namespace fsbench
