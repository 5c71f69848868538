#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsbench/dataset.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

/// Distribution for features that carry no signal for a class.
struct NoiseModel {
    enum class Kind { Uniform, Gaussian };
    Kind kind = Kind::Uniform;
    double a = 0.0;  // uniform lower bound, or Gaussian mean
    double b = 1.0;  // uniform upper bound, or Gaussian sd

    double draw(SeededRng& rng) const;
};

struct ClassSpec {
    int class_id = 1;
    std::size_t samples = 0;
    /// Relevant features (zero-based) with their mean and sd, in matching order.
    std::vector<std::size_t> relevant;
    std::vector<double> means;
    std::vector<double> sds;
    NoiseModel noise;
};

/// Generated data plus the truth it was built from and a provenance record.
struct SyntheticData {
    Dataset data;
    RelevanceTruth truth;
    nlohmann::json config;
};

/// Class-c rows: relevant features ~ N(mean, sd); every other feature is
/// drawn from the class's noise model. Rows come out grouped by class.
SyntheticData gen_structured(const std::vector<ClassSpec>& specs, std::size_t total_features, SeededRng& rng);

enum class Shape { Moons, Circles, Blobs };

struct ShapeOptions {
    Shape shape = Shape::Moons;
    std::size_t samples = 2500;
    std::size_t noise_features = 18;
    double noise_level = 0.0;  // percent; jitter sd = level / 100 * shape scale
    int centers = 4;           // blobs only
    int informative = 6;       // blobs only; moons/circles always use 2
};

/// Two interleaved half circles, two concentric circles (3:4 class
/// imbalance), or Gaussian blobs, padded with U[0,1] noise features.
SyntheticData gen_shapes(const ShapeOptions& options, SeededRng& rng);

struct DistanceTable {
    std::vector<std::vector<double>> values;  // K x K
};

/// Mean Euclidean distance over all cross-class sample pairs, raw features.
DistanceTable distance_table(const Dataset& d);

struct InterclassResult {
    SyntheticData synthetic;
    DistanceTable distances;
};

/// Classes on a line with equal centroid spacing; the first class of
/// `squeeze` is moved toward the second so that their mean pair distance
/// shrinks to base * (3.2 / 15.8)^(factor / 2). factor 0 leaves the line
/// equally spaced, factor 2 reproduces the 200% reduction.
InterclassResult gen_interclass(const std::vector<ClassSpec>& base, std::pair<int, int> squeeze, double factor,
                                SeededRng& rng);

/// Named presets: d1, d2, d3, d4, moons, circles, blobs, blobs-xl.
/// `features` overrides the total feature count for blobs-xl (default 1000).
SyntheticData make_preset(const std::string& name, SeededRng& rng, std::size_t features = 0);
bool is_preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// Specs behind the structured presets (exposed for tests).
std::vector<ClassSpec> preset_specs(const std::string& name);
std::size_t preset_feature_count(const std::string& name);

}  // namespace fsbench
