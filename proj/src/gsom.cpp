#include "fsbench/gsom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fsbench/diagnostics.hpp"

namespace fsbench {

double NeighborhoodSchedule::learning_rate(double progress) const {
    progress = std::clamp(progress, 0.0, 1.0);
    return initial_learning_rate * std::pow(final_learning_rate / initial_learning_rate, progress);
}

double NeighborhoodSchedule::width(double initial_width, double progress) const {
    progress = std::clamp(progress, 0.0, 1.0);
    return initial_width * std::pow(final_width / initial_width, progress);
}

double neighborhood_kernel(double lattice_sq_distance, double width) {
    return std::exp(-lattice_sq_distance / (2.0 * width * width));
}

std::size_t Network::add_node(std::vector<double> weights, GridPos pos) {
    if (weights.size() != dimension_) {
        throw std::invalid_argument("node weight length does not match network dimension");
    }
    if (lattice_.count(pos)) {
        throw std::invalid_argument("lattice position already occupied");
    }
    const std::size_t idx = nodes_.size();
    nodes_.push_back(Node{std::move(weights), std::vector<double>(dimension_, 1.0), pos, 0.0});
    lattice_.emplace(pos, idx);
    return idx;
}

std::optional<std::size_t> Network::at(GridPos pos) const {
    auto it = lattice_.find(pos);
    if (it == lattice_.end()) {
        return std::nullopt;
    }
    return it->second;
}

namespace {

constexpr GridPos kDirections[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

GridPos offset(GridPos p, GridPos d) { return {p.x + d.x, p.y + d.y}; }

}  // namespace

std::vector<std::size_t> Network::lattice_neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (auto d : kDirections) {
        if (auto n = at(offset(nodes_[i].pos, d))) {
            out.push_back(*n);
        }
    }
    return out;
}

bool Network::is_boundary(std::size_t i) const { return lattice_neighbors(i).size() < 4; }

double Network::half_diagonal() const {
    if (nodes_.empty()) {
        return 0.0;
    }
    int min_x = nodes_[0].pos.x, max_x = min_x, min_y = nodes_[0].pos.y, max_y = min_y;
    for (const auto& n : nodes_) {
        min_x = std::min(min_x, n.pos.x);
        max_x = std::max(max_x, n.pos.x);
        min_y = std::min(min_y, n.pos.y);
        max_y = std::max(max_y, n.pos.y);
    }
    const double w = max_x - min_x + 1;
    const double h = max_y - min_y + 1;
    return 0.5 * std::sqrt(w * w + h * h);
}

double masked_sq_distance(const Node& n, std::span<const double> x) {
    double sum = 0.0;
    const double* w = n.weights.data();
    const double* m = n.mask.data();
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double diff = x[k] - w[k];
        sum += m[k] * diff * diff;
    }
    return sum;
}

Bmu bmu(const Network& net, std::span<const double> x) {
    if (x.size() != net.dimension()) {
        throw std::invalid_argument("sample length does not match network dimension");
    }
    Bmu best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < net.size(); ++j) {
        const double dist = masked_sq_distance(net.node(j), x);
        if (dist < best.distance) {
            best = {j, dist};
        }
    }
    return best;
}

std::vector<std::size_t> assign(const Network& net, const Dataset& d) {
    std::vector<std::size_t> out(d.samples());
    for (std::size_t i = 0; i < d.samples(); ++i) {
        out[i] = bmu(net, d.row(i)).node;
    }
    return out;
}

std::size_t HitMatrix::node_total(std::size_t node) const {
    std::size_t s = 0;
    for (int c = 1; c <= classes_; ++c) {
        s += at(node, c);
    }
    return s;
}

std::size_t HitMatrix::class_total(int class_id) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < nodes_; ++j) {
        s += at(j, class_id);
    }
    return s;
}

std::size_t HitMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

HitMatrix hit_matrix_from(std::span<const std::size_t> assignment, const Dataset& d, std::size_t nodes) {
    HitMatrix h(nodes, d.num_classes());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        ++h.at(assignment[i], d.label(i));
    }
    return h;
}

HitMatrix hit_matrix(const Network& net, const Dataset& d) {
    const auto a = assign(net, d);
    return hit_matrix_from(a, d, net.size());
}

std::vector<double> node_errors(const Network& net, const Dataset& d) {
    std::vector<double> e(net.size(), 0.0);
    for (std::size_t i = 0; i < d.samples(); ++i) {
        const auto b = bmu(net, d.row(i));
        e[b.node] += b.distance;
    }
    return e;
}

double quantization_error(const Network& net, const Dataset& d) {
    double qe = 0.0;
    for (std::size_t i = 0; i < d.samples(); ++i) {
        qe += bmu(net, d.row(i)).distance;
    }
    return qe;
}

double growth_threshold(std::size_t dimension, double spread_factor) {
    return -static_cast<double>(dimension) * std::log(spread_factor);
}

namespace {

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    void include(std::span<const double> v) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    }
    void clamp(std::vector<double>& v) const {
        for (std::size_t k = 0; k < v.size(); ++k) {
            v[k] = std::clamp(v[k], lo[k], hi[k]);
        }
    }
};

Box bounding_box(const Dataset& d, const Network& net) {
    const auto inf = std::numeric_limits<double>::infinity();
    Box b{std::vector<double>(d.features(), inf), std::vector<double>(d.features(), -inf)};
    for (std::size_t i = 0; i < d.samples(); ++i) {
        b.include(d.row(i));
    }
    for (const auto& n : net.nodes()) {
        b.include(n.weights);
    }
    return b;
}

// U[lo, hi] per feature over the data's bounding box. On min-max normalised
// data this is U[0,1] except on constant columns, which get their constant.
std::vector<double> random_weights(const Box& data_box, SeededRng& rng) {
    std::vector<double> w(data_box.lo.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = data_box.lo[k] + rng.uniform() * (data_box.hi[k] - data_box.lo[k]);
    }
    return w;
}

// Applies w_j += lr * K(j, winner) * (x - w_j) to every node whose kernel
// weight is not negligible.
void adapt(Network& net, std::size_t winner, std::span<const double> x, double lr, double width) {
    const GridPos c = net.node(winner).pos;
    const double cutoff = 3.0 * width;
    const double cutoff_sq = cutoff * cutoff;
    for (std::size_t j = 0; j < net.size(); ++j) {
        Node& n = net.node(j);
        const double dx = n.pos.x - c.x;
        const double dy = n.pos.y - c.y;
        const double sq = dx * dx + dy * dy;
        if (sq > cutoff_sq) {
            continue;
        }
        const double rate = lr * neighborhood_kernel(sq, width);
        double* w = n.weights.data();
        for (std::size_t k = 0; k < x.size(); ++k) {
            w[k] += rate * (x[k] - w[k]);
        }
    }
}

void check_normalized(const Dataset& d) {
    if (!d.normalized()) {
        throw std::invalid_argument("map training requires a normalized dataset");
    }
    if (d.samples() == 0) {
        throw std::invalid_argument("map training requires at least one sample");
    }
}

// Weight for a node grown at `target` from `parent`:
//   opposite neighbour o exists      -> 2 w_parent - w_o
//   some other neighbour n exists    -> (w_parent + w_n) / 2, n nearest in weight space
//   parent is isolated               -> w_parent + U[-0.05, 0.05]
std::vector<double> grown_weights(const Network& net, std::size_t parent, GridPos dir, SeededRng& rng) {
    const Node& p = net.node(parent);
    std::vector<double> w = p.weights;
    if (auto o = net.at({p.pos.x - dir.x, p.pos.y - dir.y})) {
        const auto& wo = net.node(*o).weights;
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] = 2.0 * p.weights[k] - wo[k];
        }
        return w;
    }
    std::optional<std::size_t> nearest;
    double best = std::numeric_limits<double>::infinity();
    for (auto n : net.lattice_neighbors(parent)) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double diff = net.node(n).weights[k] - p.weights[k];
            s += diff * diff;
        }
        if (s < best) {
            best = s;
            nearest = n;
        }
    }
    if (nearest) {
        const auto& wn = net.node(*nearest).weights;
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] = 0.5 * (p.weights[k] + wn[k]);
        }
        return w;
    }
    for (auto& v : w) {
        v += rng.uniform(-0.05, 0.05);
    }
    return w;
}

}  // namespace

Network train_som(const Dataset& d, const SomConfig& config, SeededRng& rng) {
    check_normalized(d);
    if (config.rows < 1 || config.cols < 1 || config.iterations < 1) {
        throw std::invalid_argument("SOM grid and iteration count must be positive");
    }
    Network net(d.features());
    const Box data_box = bounding_box(d, net);
    net.seed = rng.seed();
    net.iterations = config.iterations;
    net.schedule = config.schedule;
    for (int r = 0; r < config.rows; ++r) {
        for (int c = 0; c < config.cols; ++c) {
            net.add_node(random_weights(data_box, rng), {c, r});
        }
    }
    const double sigma0 = std::max(net.half_diagonal(), config.schedule.final_width);
    std::vector<std::size_t> order(d.samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double total = static_cast<double>(config.iterations) * static_cast<double>(d.samples());
    std::size_t step = 0;
    for (int epoch = 0; epoch < config.iterations; ++epoch) {
        rng.shuffle(order);
        for (auto i : order) {
            const double progress = static_cast<double>(step) / total;
            const auto x = d.row(i);
            const auto b = bmu(net, x);
            adapt(net, b.node, x, config.schedule.learning_rate(progress),
                  config.schedule.width(sigma0, progress));
            ++step;
        }
    }
    return net;
}

Network train_gsom(const Dataset& d, const GsomConfig& config, SeededRng& rng, TrainingTrace* trace) {
    check_normalized(d);
    if (!(config.spread_factor > 0.0 && config.spread_factor < 1.0)) {
        throw std::invalid_argument("spread factor must lie in (0,1)");
    }
    if (config.iterations < 1) {
        throw std::invalid_argument("iteration count must be positive");
    }
    if (config.max_nodes < 4) {
        throw std::invalid_argument("node cap must be at least 4");
    }
    const std::size_t dim = d.features();
    Network net(dim);
    const Box data_box = bounding_box(d, net);
    net.seed = rng.seed();
    net.spread_factor = config.spread_factor;
    net.growth_threshold = growth_threshold(dim, config.spread_factor);
    net.iterations = config.iterations;
    net.schedule = config.schedule;
    for (GridPos p : {GridPos{0, 0}, GridPos{1, 0}, GridPos{0, 1}, GridPos{1, 1}}) {
        net.add_node(random_weights(data_box, rng), p);
    }
    const Box box = bounding_box(d, net);
    std::size_t max_nodes = config.max_nodes;
    if (config.samples_per_node > 0) {
        max_nodes = std::clamp<std::size_t>(d.samples() / config.samples_per_node, 4, max_nodes);
    }
    const double gt = net.growth_threshold;
    bool capped = false;

    std::vector<std::size_t> order(d.samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double total = static_cast<double>(config.iterations) * static_cast<double>(d.samples());
    std::size_t step = 0;

    for (int epoch = 0; epoch < config.iterations; ++epoch) {
        rng.shuffle(order);
        double qe_sum = 0.0;
        for (auto i : order) {
            const double progress = static_cast<double>(step) / total;
            const auto x = d.row(i);
            const auto b = bmu(net, x);
            qe_sum += b.distance;
            const double sigma = config.schedule.width(std::max(net.half_diagonal(), config.schedule.final_width),
                                                       progress);
            adapt(net, b.node, x, config.schedule.learning_rate(progress), sigma);
            ++step;

            Node& winner = net.node(b.node);
            winner.error += b.distance;
            if (capped || winner.error <= gt) {
                continue;
            }
            if (net.size() >= max_nodes) {
                capped = true;
                warn("GSOM growth stopped at the node cap of " + std::to_string(max_nodes));
                continue;
            }
            if (!net.is_boundary(b.node)) {
                // Interior: hand half the error to the lattice neighbours.
                const auto nbrs = net.lattice_neighbors(b.node);
                const double share = 0.5 * winner.error / static_cast<double>(nbrs.size());
                winner.error *= 0.5;
                for (auto n : nbrs) {
                    net.node(n).error += share;
                }
                continue;
            }
            TrainingTrace::Growth event{epoch, b.node, {}};
            const GridPos parent_pos = winner.pos;
            std::vector<std::pair<GridPos, std::vector<double>>> pending;
            for (auto dir : kDirections) {
                const GridPos target = offset(parent_pos, dir);
                if (net.at(target)) {
                    continue;
                }
                auto w = grown_weights(net, b.node, dir, rng);
                box.clamp(w);
                pending.emplace_back(target, std::move(w));
            }
            const std::size_t room = max_nodes - net.size();
            if (pending.size() > room) {
                pending.resize(room);
            }
            const double half = 0.5 * net.node(b.node).error;
            net.node(b.node).error = half;
            const double share = half / static_cast<double>(pending.size());
            for (auto& [pos, w] : pending) {
                const auto idx = net.add_node(std::move(w), pos);
                net.node(idx).error = share;
                event.created.push_back(idx);
            }
            if (trace) {
                trace->growth_events.push_back(std::move(event));
            }
        }
        if (trace) {
            trace->nodes_per_epoch.push_back(net.size());
            trace->epoch_mean_qe.push_back(qe_sum / static_cast<double>(d.samples()));
        }
    }

    // Smoothing: fixed lattice, reduced learning rate, narrow neighbourhood.
    const int smoothing_epochs = static_cast<int>(std::lround(config.iterations * config.smoothing_fraction));
    if (smoothing_epochs > 0) {
        NeighborhoodSchedule smooth = config.schedule;
        smooth.initial_learning_rate = config.schedule.initial_learning_rate * config.smoothing_lr_factor;
        smooth.final_learning_rate = std::min(config.schedule.final_learning_rate, smooth.initial_learning_rate);
        const double smooth_total = static_cast<double>(smoothing_epochs) * static_cast<double>(d.samples());
        std::size_t s = 0;
        for (int epoch = 0; epoch < smoothing_epochs; ++epoch) {
            rng.shuffle(order);
            for (auto i : order) {
                const double progress = static_cast<double>(s) / smooth_total;
                const auto x = d.row(i);
                const auto b = bmu(net, x);
                adapt(net, b.node, x, smooth.learning_rate(progress), config.schedule.final_width);
                ++s;
            }
        }
    }
    if (trace) {
        trace->growth_capped = capped;
    }
    return net;
}

nlohmann::json to_json(const Network& net) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : net.nodes()) {
        nodes.push_back({{"grid_pos", {n.pos.x, n.pos.y}},
                         {"weights", n.weights},
                         {"feature_mask", n.mask},
                         {"error", n.error}});
    }
    return {{"config",
             {{"seed", net.seed},
              {"spread_factor", net.spread_factor},
              {"growth_threshold", net.growth_threshold},
              {"iterations", net.iterations},
              {"schedule",
               {{"initial_learning_rate", net.schedule.initial_learning_rate},
                {"final_learning_rate", net.schedule.final_learning_rate},
                {"final_width", net.schedule.final_width}}}}},
            {"dimension", net.dimension()},
            {"nodes", nodes}};
}

Network network_from_json(const nlohmann::json& j) {
    Network net(j.at("dimension").get<std::size_t>());
    const auto& cfg = j.at("config");
    net.seed = cfg.at("seed").get<std::uint64_t>();
    net.spread_factor = cfg.at("spread_factor").get<double>();
    net.growth_threshold = cfg.at("growth_threshold").get<double>();
    net.iterations = cfg.at("iterations").get<int>();
    const auto& s = cfg.at("schedule");
    net.schedule.initial_learning_rate = s.at("initial_learning_rate").get<double>();
    net.schedule.final_learning_rate = s.at("final_learning_rate").get<double>();
    net.schedule.final_width = s.at("final_width").get<double>();
    for (const auto& n : j.at("nodes")) {
        const auto idx =
            net.add_node(n.at("weights").get<std::vector<double>>(), {n.at("grid_pos")[0], n.at("grid_pos")[1]});
        net.node(idx).mask = n.at("feature_mask").get<std::vector<double>>();
        net.node(idx).error = n.at("error").get<double>();
    }
    return net;
}

}  // namespace fsbench
