#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "fsbench/diagnostics.hpp"
#include "fsbench/gsom.hpp"
#include "fsbench/rng.hpp"
#include "fsbench/synth.hpp"

using namespace fsbench;

namespace {

Dataset normalized(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t f = 0; f < rows[i].size(); ++f) m(i, f) = rows[i][f];
    return normalize_min_max(Dataset(std::move(m), labels));
}

Dataset two_blobs(SeededRng& rng, std::size_t per_class, std::size_t dim) {
    Matrix m(2 * per_class, dim);
    std::vector<int> labels(2 * per_class);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        labels[i] = i < per_class ? 1 : 2;
        for (std::size_t f = 0; f < dim; ++f) m(i, f) = (labels[i] == 1 ? 0.0 : 10.0) + rng.normal(0.0, 0.5);
    }
    return normalize_min_max(Dataset(std::move(m), labels));
}

bool lattice_connected(const Network& net) {
    std::vector<bool> seen(net.size(), false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        const auto i = q.front();
        q.pop();
        for (auto n : net.lattice_neighbors(i)) {
            if (!seen[n]) {
                seen[n] = true;
                ++count;
                q.push(n);
            }
        }
    }
    return count == net.size();
}

bool unique_positions(const Network& net) {
    std::set<GridPos> s;
    for (const auto& n : net.nodes()) s.insert(n.pos);
    return s.size() == net.size();
}

GsomConfig quick_gsom(int iterations = 20) {
    GsomConfig c;
    c.iterations = iterations;
    return c;
}

}  // namespace

TEST(GrowthThreshold, MinusDimensionTimesLogSpread) {
    EXPECT_DOUBLE_EQ(growth_threshold(10, 0.9), -10.0 * std::log(0.9));
}

TEST(Network, AddNodeRejectsCollisionsAndBadLength) {
    Network net(2);
    net.add_node({0, 0}, {0, 0});
    EXPECT_THROW(net.add_node({1, 1}, {0, 0}), std::invalid_argument);
    EXPECT_THROW(net.add_node({1}, {1, 0}), std::invalid_argument);
    EXPECT_EQ(net.node(0).mask, (std::vector<double>{1, 1}));
}

TEST(Network, NeighborOrderAndBoundary) {
    Network net(1);
    for (int y = -1; y <= 1; ++y)
        for (int x = -1; x <= 1; ++x) net.add_node({0}, {x, y});
    const auto centre = *net.at({0, 0});
    const auto n = net.lattice_neighbors(centre);
    ASSERT_EQ(n.size(), 4u);
    EXPECT_EQ(net.node(n[0]).pos, (GridPos{1, 0}));
    EXPECT_EQ(net.node(n[1]).pos, (GridPos{-1, 0}));
    EXPECT_EQ(net.node(n[2]).pos, (GridPos{0, 1}));
    EXPECT_EQ(net.node(n[3]).pos, (GridPos{0, -1}));
    EXPECT_FALSE(net.is_boundary(centre));
    EXPECT_TRUE(net.is_boundary(*net.at({1, 1})));
}

TEST(Bmu, NearestPoint) {
    Network net(2);
    net.add_node({0, 0}, {0, 0});
    net.add_node({1, 1}, {1, 1});
    EXPECT_EQ(bmu(net, std::vector<double>{0.1, 0.1}).node, 0u);
}

TEST(Bmu, MaskedDistanceCanWin) {
    Network net(2);
    const auto a = net.add_node({0, 9}, {0, 0});
    net.node(a).mask = {1, 0};
    net.add_node({0.3, 0.1}, {1, 0});
    const auto b = bmu(net, std::vector<double>{0, 0});
    EXPECT_EQ(b.node, a);
    EXPECT_EQ(b.distance, 0.0);
    EXPECT_NEAR(masked_sq_distance(net.node(1), std::vector<double>{0, 0}), 0.10, 1e-15);
}

TEST(Bmu, ExactMatchHasZeroDistance) {
    Network net(2);
    net.add_node({0.2, 0.4}, {0, 0});
    net.add_node({0.7, 0.1}, {1, 0});
    const auto b = bmu(net, std::vector<double>{0.7, 0.1});
    EXPECT_EQ(b.node, 1u);
    EXPECT_EQ(b.distance, 0.0);
}

TEST(Bmu, TiesGoToLowestIndex) {
    Network net(1);
    net.add_node({0.0}, {0, 0});
    net.add_node({1.0}, {1, 0});
    EXPECT_EQ(bmu(net, std::vector<double>{0.5}).node, 0u);
}

TEST(Bmu, MatchesNaiveArgminOnRandomQueries) {
    SeededRng rng(31);
    Network net(5);
    for (int i = 0; i < 30; ++i) {
        std::vector<double> w(5);
        for (auto& v : w) v = rng.uniform();
        net.add_node(w, {i, 0});
    }
    for (int q = 0; q < 100; ++q) {
        std::vector<double> x(5);
        for (auto& v : x) v = rng.uniform();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < net.size(); ++j) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += (x[k] - net.node(j).weights[k]) * (x[k] - net.node(j).weights[k]);
            if (s < best_d) {
                best_d = s;
                best = j;
            }
        }
        ASSERT_EQ(bmu(net, x).node, best);
    }
}

TEST(Bmu, ScalingSamplesAndWeightsKeepsIdentity) {
    SeededRng rng(8);
    Network net(3), scaled(3);
    for (int i = 0; i < 12; ++i) {
        std::vector<double> w(3);
        for (auto& v : w) v = rng.uniform();
        net.add_node(w, {i, 0});
        for (auto& v : w) v *= 7.5;
        scaled.add_node(w, {i, 0});
    }
    for (int q = 0; q < 100; ++q) {
        std::vector<double> x(3);
        for (auto& v : x) v = rng.uniform();
        const auto a = bmu(net, x).node;
        for (auto& v : x) v *= 7.5;
        ASSERT_EQ(bmu(scaled, x).node, a);
    }
}

TEST(QuantizationError, HandArithmetic) {
    Network net(2);
    net.add_node({0, 0}, {0, 0});
    const auto d = normalized({{1, 1}, {0, 0}}, {1, 1});
    EXPECT_DOUBLE_EQ(quantization_error(net, d), 2.0);
    const auto e = node_errors(net, d);
    EXPECT_DOUBLE_EQ(e[0], 2.0);
}

TEST(QuantizationError, ZeroWhenSamplesSitOnNodes) {
    Network net(2);
    net.add_node({0, 0}, {0, 0});
    net.add_node({1, 1}, {1, 0});
    const auto d = normalized({{1, 1}, {0, 0}}, {1, 2});
    EXPECT_EQ(quantization_error(net, d), 0.0);
}

TEST(QuantizationError, NodeErrorsSumToBatchTotal) {
    SeededRng rng(12);
    const auto d = two_blobs(rng, 60, 4);
    const auto net = train_gsom(d, quick_gsom(), rng);
    const auto e = node_errors(net, d);
    double sum = 0.0;
    for (double v : e) sum += v;
    double brute = 0.0;
    for (std::size_t i = 0; i < d.samples(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& n : net.nodes()) best = std::min(best, masked_sq_distance(n, d.row(i)));
        brute += best;
    }
    EXPECT_NEAR(sum, quantization_error(net, d), 1e-9);
    EXPECT_NEAR(brute, quantization_error(net, d), 1e-9);
}

TEST(HitMatrix, SingleNodeTakesEverything) {
    Network net(1);
    net.add_node({0.5}, {0, 0});
    const auto d = normalized({{0}, {1}, {0.3}}, {1, 2, 2});
    const auto h = hit_matrix(net, d);
    EXPECT_EQ(h.node_total(0), 3u);
    EXPECT_EQ(h.at(0, 1), 1u);
    EXPECT_EQ(h.at(0, 2), 2u);
}

TEST(HitMatrix, ColumnSumsAreClassCounts) {
    SeededRng rng(13);
    const auto d = two_blobs(rng, 50, 3);
    const auto net = train_gsom(d, quick_gsom(), rng);
    const auto h = hit_matrix(net, d);
    const auto counts = d.class_counts();
    for (int c = 1; c <= 2; ++c) EXPECT_EQ(h.class_total(c), counts[c - 1]);
    EXPECT_EQ(h.total(), d.samples());
    // Recount from per-sample BMUs.
    for (std::size_t j = 0; j < net.size(); ++j) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < d.samples(); ++i) n += bmu(net, d.row(i)).node == j;
        ASSERT_EQ(h.node_total(j), n);
    }
}

TEST(TrainSom, EachStepHalvesTheGapAtRateOneHalf) {
    const auto d = normalized({{0.0}, {1.0}}, {1, 1});
    SomConfig c;
    c.rows = c.cols = 1;
    c.iterations = 3;
    c.schedule.initial_learning_rate = c.schedule.final_learning_rate = 0.5;
    SeededRng a(3), replay(3);
    const auto net = train_som(d, c, a);
    // Replay the draws: one weight, then one shuffle per epoch.
    double w = replay.uniform();
    std::vector<std::size_t> order{0, 1};
    for (int e = 0; e < 3; ++e) {
        replay.shuffle(order);
        for (auto i : order) {
            const double before = std::abs(d.at(i, 0) - w);
            w += 0.5 * (d.at(i, 0) - w);
            ASSERT_NEAR(std::abs(d.at(i, 0) - w), 0.5 * before, 1e-15);
        }
    }
    EXPECT_EQ(net.node(0).weights[0], w);
}

TEST(TrainSom, RequiresNormalizedData) {
    Matrix m(2, 1);
    const Dataset raw(std::move(m), {1, 1});
    SeededRng rng(1);
    EXPECT_THROW(train_som(raw, SomConfig{}, rng), std::invalid_argument);
}

TEST(TrainSom, SameSeedSameMap) {
    SeededRng g(4);
    const auto d = two_blobs(g, 40, 3);
    SomConfig c;
    c.iterations = 10;
    SeededRng a(77), b(77);
    EXPECT_EQ(train_som(d, c, a), train_som(d, c, b));
}

TEST(TrainSom, TwoBlobsLandOnDisjointNodes) {
    int disjoint = 0;
    for (std::uint64_t s = 0; s < 15; ++s) {
        SeededRng rng(100 + s);
        const auto d = two_blobs(rng, 100, 4);
        SomConfig c;
        c.iterations = 20;
        const auto net = train_som(d, c, rng);
        const auto h = hit_matrix(net, d);
        bool ok = true;
        for (std::size_t j = 0; j < h.nodes(); ++j) ok = ok && (h.at(j, 1) == 0 || h.at(j, 2) == 0);
        disjoint += ok;
    }
    EXPECT_GE(disjoint, 14);
}

TEST(TrainGsom, IdenticalSamplesNeverGrow) {
    const auto d = normalized({{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}}, {1, 1, 1, 1});
    SeededRng rng(5);
    TrainingTrace trace;
    const auto net = train_gsom(d, GsomConfig{}, rng, &trace);
    EXPECT_EQ(net.size(), 4u);
    EXPECT_TRUE(trace.growth_events.empty());
}

TEST(TrainGsom, StartsWithTwoByTwoBlock) {
    SeededRng rng(6);
    const auto d = two_blobs(rng, 30, 2);
    const auto net = train_gsom(d, quick_gsom(1), rng);
    ASSERT_GE(net.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_LE(std::abs(net.node(i).pos.x), 1);
        EXPECT_GE(net.node(i).pos.x, 0);
        EXPECT_GE(net.node(i).pos.y, 0);
        EXPECT_LE(net.node(i).pos.y, 1);
    }
    EXPECT_DOUBLE_EQ(net.growth_threshold, growth_threshold(2, 0.9));
}

TEST(TrainGsom, StructuralPropertiesAcrossSeeds) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        SeededRng g(200 + s);
        const auto data = make_preset("d3", g).data;
        const auto d = normalize_min_max(data);
        TrainingTrace trace;
        SeededRng rng(s);
        const auto net = train_gsom(d, quick_gsom(), rng, &trace);
        ASSERT_FALSE(trace.nodes_per_epoch.empty());
        EXPECT_TRUE(std::is_sorted(trace.nodes_per_epoch.begin(), trace.nodes_per_epoch.end()));
        EXPECT_TRUE(unique_positions(net));
        EXPECT_TRUE(lattice_connected(net));
        for (const auto& n : net.nodes()) {
            for (std::size_t k = 0; k < n.weights.size(); ++k) {
                ASSERT_TRUE(std::isfinite(n.weights[k]));
                ASSERT_GE(n.weights[k], 0.0);
                ASSERT_LE(n.weights[k], 1.0);
                ASSERT_EQ(n.mask[k], 1.0);
            }
            ASSERT_GE(n.error, 0.0);
        }
        // Every created node appears at a free 4-neighbour of its parent.
        for (const auto& ev : trace.growth_events) {
            for (auto c : ev.created) {
                const auto& p = net.node(ev.parent).pos;
                const auto& q = net.node(c).pos;
                ASSERT_EQ(std::abs(p.x - q.x) + std::abs(p.y - q.y), 1);
                ASSERT_GT(c, ev.parent);
            }
        }
    }
}

TEST(TrainGsom, LatticeStaysConnectedAfterEachGrowth) {
    SeededRng g(9);
    const auto d = normalize_min_max(make_preset("d3", g).data);
    SeededRng rng(10);
    TrainingTrace trace;
    const auto net = train_gsom(d, quick_gsom(), rng, &trace);
    // Replay the growth order: the nodes present after event e are the
    // first 4 + (nodes created so far); each prefix must be connected.
    Network replay(d.features());
    std::size_t next = 0;
    auto add_until = [&](std::size_t n) {
        for (; next < n; ++next) replay.add_node(net.node(next).weights, net.node(next).pos);
    };
    add_until(4);
    for (const auto& ev : trace.growth_events) {
        add_until(ev.created.back() + 1);
        ASSERT_TRUE(unique_positions(replay));
        ASSERT_TRUE(lattice_connected(replay));
    }
}

TEST(TrainGsom, MeanEpochQuantizationErrorFallsDuringGrowth) {
    SeededRng g(21);
    const auto d = normalize_min_max(make_preset("d3", g).data);
    SeededRng rng(22);
    TrainingTrace trace;
    train_gsom(d, quick_gsom(40), rng, &trace);
    const auto& qe = trace.epoch_mean_qe;
    ASSERT_EQ(qe.size(), 40u);
    // Non-increasing up to 2% sampling jitter between consecutive epochs.
    for (std::size_t i = 1; i < qe.size(); ++i) EXPECT_LE(qe[i], qe[i - 1] * 1.02) << "epoch " << i;
    EXPECT_LT(qe.back(), 0.5 * qe.front());
}

TEST(TrainGsom, DeterministicUnderFixedSeed) {
    SeededRng g(14);
    const auto d = normalize_min_max(make_preset("d3", g).data);
    SeededRng a(15), b(15);
    const auto na = train_gsom(d, quick_gsom(), a);
    const auto nb = train_gsom(d, quick_gsom(), b);
    EXPECT_EQ(na, nb);
    EXPECT_EQ(hit_matrix(na, d), hit_matrix(nb, d));
    EXPECT_EQ(quantization_error(na, d), quantization_error(nb, d));
}

TEST(TrainGsom, NodeCapStopsGrowthWithWarning) {
    SeededRng g(16);
    const auto d = normalize_min_max(make_preset("d3", g).data);
    auto c = quick_gsom();
    c.max_nodes = 6;
    SeededRng rng(17);
    ScopedWarningCapture cap;
    TrainingTrace trace;
    const auto net = train_gsom(d, c, rng, &trace);
    EXPECT_LE(net.size(), 6u);
    EXPECT_FALSE(cap.messages().empty());
}

TEST(TrainGsom, SmallSampleCountBoundsTheMap) {
    SeededRng g(18);
    Matrix m(40, 2);
    for (std::size_t i = 0; i < 40; ++i) {
        m(i, 0) = g.uniform();
        m(i, 1) = g.uniform();
    }
    const auto d = normalize_min_max(Dataset(std::move(m), std::vector<int>(40, 1)));
    auto c = quick_gsom();
    c.spread_factor = 0.99;
    SeededRng rng(19);
    ScopedWarningCapture quiet;
    EXPECT_LE(train_gsom(d, c, rng).size(), 20u);
    c.samples_per_node = 0;
    SeededRng again(19);
    EXPECT_GT(train_gsom(d, c, again).size(), 20u);
}

TEST(TrainGsom, D1GrowsPastFiveNodes) {
    for (std::uint64_t s = 0; s < 15; ++s) {
        SeededRng g(300 + s);
        const auto d = normalize_min_max(make_preset("d1", g).data);
        SeededRng rng(s);
        ScopedWarningCapture quiet;
        EXPECT_GE(train_gsom(d, quick_gsom(5), rng).size(), 5u) << "seed " << s;
    }
}

TEST(TrainGsom, RejectsBadSpreadFactor) {
    SeededRng rng(1);
    const auto d = normalized({{0}, {1}}, {1, 1});
    auto c = quick_gsom();
    c.spread_factor = 1.0;
    EXPECT_THROW(train_gsom(d, c, rng), std::invalid_argument);
}

TEST(Schedule, DecaysFromInitialToFinal) {
    NeighborhoodSchedule s;
    EXPECT_DOUBLE_EQ(s.learning_rate(0.0), 0.7);
    EXPECT_NEAR(s.learning_rate(1.0), 0.01, 1e-15);
    EXPECT_DOUBLE_EQ(s.width(4.0, 0.0), 4.0);
    EXPECT_NEAR(s.width(4.0, 1.0), 0.5, 1e-15);
    for (double p = 0.0; p < 1.0; p += 0.1) {
        EXPECT_GT(s.width(4.0, p), s.width(4.0, p + 0.1));
        EXPECT_GT(s.learning_rate(p), 0.0);
        EXPECT_LE(s.learning_rate(p), 0.7);
    }
    EXPECT_DOUBLE_EQ(neighborhood_kernel(0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(neighborhood_kernel(2.0, 1.0), std::exp(-1.0));
}

TEST(NetworkJson, RoundTripsBitExactly) {
    SeededRng g(18);
    const auto d = normalize_min_max(make_preset("d3", g).data);
    SeededRng rng(19);
    auto net = train_gsom(d, quick_gsom(5), rng);
    net.node(2).mask[3] = 0.0;
    const auto back = network_from_json(nlohmann::json::parse(to_json(net).dump()));
    EXPECT_EQ(back, net);
}
