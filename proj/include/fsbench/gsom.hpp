#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsbench/dataset.hpp"
#include "fsbench/rng.hpp"

namespace fsbench {

struct GridPos {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

/// One map unit. `mask` scales each feature's contribution to the BMU
/// distance; it is all ones until the FWGSOM analysis changes it.
struct Node {
    std::vector<double> weights;
    std::vector<double> mask;
    GridPos pos;
    double error = 0.0;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Learning-rate and neighbourhood-width decay over a training phase.
/// Both decay exponentially in the phase progress p in [0,1]:
///   lr(p)    = lr0 * (lr_final / lr0)^p
///   sigma(p) = sigma0 * (width_final / sigma0)^p
struct NeighborhoodSchedule {
    double initial_learning_rate = 0.7;
    double final_learning_rate = 0.01;
    double final_width = 0.5;

    double learning_rate(double progress) const;
    double width(double initial_width, double progress) const;

    friend bool operator==(const NeighborhoodSchedule&, const NeighborhoodSchedule&) = default;
};

/// Kernel weight exp(-d^2 / (2 sigma^2)) for squared lattice distance d^2.
double neighborhood_kernel(double lattice_sq_distance, double width);

struct GsomConfig {
    double spread_factor = 0.9;
    int iterations = 100;              // growth-phase epochs
    double smoothing_fraction = 0.2;   // extra epochs, as a fraction of `iterations`
    double smoothing_lr_factor = 0.1;  // smoothing starts at lr0 * factor
    std::size_t max_nodes = 560;       // growth stops here
    std::size_t samples_per_node = 2;  // and at n / samples_per_node (0 disables)
    NeighborhoodSchedule schedule;
};

struct SomConfig {
    int rows = 8;
    int cols = 8;
    int iterations = 100;
    NeighborhoodSchedule schedule;
};

/// Node collection on an integer lattice. Node identity is the creation
/// index; every tie in the library resolves to the lowest index.
class Network {
public:
    Network() = default;
    explicit Network(std::size_t dimension) : dimension_(dimension) {}

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(std::size_t i) const { return nodes_[i]; }
    Node& node(std::size_t i) { return nodes_[i]; }

    /// Appends a node; throws std::invalid_argument on an occupied position
    /// or a weight vector of the wrong length.
    std::size_t add_node(std::vector<double> weights, GridPos pos);

    std::optional<std::size_t> at(GridPos pos) const;
    /// Existing 4-neighbours in the order +x, -x, +y, -y.
    std::vector<std::size_t> lattice_neighbors(std::size_t i) const;
    bool is_boundary(std::size_t i) const;
    /// Half the diagonal of the lattice bounding box, measured in cells.
    double half_diagonal() const;

    // Provenance echoed into serialized snapshots.
    std::uint64_t seed = 0;
    double spread_factor = 0.0;
    double growth_threshold = 0.0;
    int iterations = 0;
    NeighborhoodSchedule schedule;

    friend bool operator==(const Network&, const Network&) = default;

private:
    std::size_t dimension_ = 0;
    std::vector<Node> nodes_;
    std::map<GridPos, std::size_t> lattice_;
};

struct Bmu {
    std::size_t node = 0;
    double distance = 0.0;  // masked squared distance
};

/// Sum over features of mask[k] * (x[k] - w[k])^2.
double masked_sq_distance(const Node& n, std::span<const double> x);

/// Best matching unit under the masked distance; ties go to the lowest index.
Bmu bmu(const Network& net, std::span<const double> x);

/// BMU node index of every sample.
std::vector<std::size_t> assign(const Network& net, const Dataset& d);

/// node x class sample counts.
class HitMatrix {
public:
    HitMatrix() = default;
    HitMatrix(std::size_t nodes, int classes) : nodes_(nodes), classes_(classes), counts_(nodes * classes, 0) {}

    std::size_t nodes() const { return nodes_; }
    int classes() const { return classes_; }
    std::size_t& at(std::size_t node, int class_id) { return counts_[node * classes_ + (class_id - 1)]; }
    std::size_t at(std::size_t node, int class_id) const { return counts_[node * classes_ + (class_id - 1)]; }
    std::size_t node_total(std::size_t node) const;
    std::size_t class_total(int class_id) const;
    std::size_t total() const;

    friend bool operator==(const HitMatrix&, const HitMatrix&) = default;

private:
    std::size_t nodes_ = 0;
    int classes_ = 0;
    std::vector<std::size_t> counts_;
};

HitMatrix hit_matrix(const Network& net, const Dataset& d);
HitMatrix hit_matrix_from(std::span<const std::size_t> assignment, const Dataset& d, std::size_t nodes);

/// Per-node accumulated error E_i: masked squared distance of every sample
/// to its BMU, summed on that BMU.
std::vector<double> node_errors(const Network& net, const Dataset& d);

/// Total quantization error: sum of E_i, i.e. the sum over samples of the
/// masked squared distance to the BMU.
double quantization_error(const Network& net, const Dataset& d);

/// Observable training events, for tests and diagnostics.
struct TrainingTrace {
    struct Growth {
        int epoch = 0;
        std::size_t parent = 0;
        std::vector<std::size_t> created;
    };
    std::vector<Growth> growth_events;
    std::vector<std::size_t> nodes_per_epoch;
    /// Mean masked squared BMU distance of the presentations in each epoch.
    std::vector<double> epoch_mean_qe;
    bool growth_capped = false;
};

/// Online SOM on a fixed rows x cols grid, weights drawn uniformly over the
/// data bounding box (U[0,1] on normalised, non-constant columns).
/// Runs `iterations` epochs over a shuffled sample order.
Network train_som(const Dataset& d, const SomConfig& config, SeededRng& rng);

/// Growing SOM. Starts from a 2x2 block initialised like train_som; growth
/// threshold GT = -D ln(spread_factor). See gsom.cpp for the growth rules.
Network train_gsom(const Dataset& d, const GsomConfig& config, SeededRng& rng, TrainingTrace* trace = nullptr);

double growth_threshold(std::size_t dimension, double spread_factor);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace fsbench
