#include "fsbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fsbench/diagnostics.hpp"

namespace fsbench {

double NoiseModel::draw(SeededRng& rng) const {
    return kind == Kind::Uniform ? rng.uniform(a, b) : rng.normal(a, b);
}

namespace {

nlohmann::json noise_json(const NoiseModel& n) {
    return {{"kind", n.kind == NoiseModel::Kind::Uniform ? "uniform" : "gaussian"}, {"a", n.a}, {"b", n.b}};
}

nlohmann::json specs_json(const std::vector<ClassSpec>& specs) {
    auto arr = nlohmann::json::array();
    for (const auto& s : specs) {
        auto rel = nlohmann::json::array();
        for (auto f : s.relevant) {
            rel.push_back(f + 1);
        }
        arr.push_back({{"class", s.class_id},
                       {"samples", s.samples},
                       {"relevant", rel},
                       {"means", s.means},
                       {"sds", s.sds},
                       {"noise", noise_json(s.noise)}});
    }
    return arr;
}

void warn_on_overlap(const std::vector<ClassSpec>& specs) {
    for (std::size_t a = 0; a < specs.size(); ++a) {
        for (std::size_t b = a + 1; b < specs.size(); ++b) {
            if (specs[a].relevant != specs[b].relevant) {
                continue;
            }
            double sq = 0.0;
            double sd = 0.0;
            for (std::size_t r = 0; r < specs[a].relevant.size(); ++r) {
                const double diff = specs[a].means[r] - specs[b].means[r];
                sq += diff * diff;
                sd = std::max({sd, specs[a].sds[r], specs[b].sds[r]});
            }
            if (std::sqrt(sq) < 2.0 * sd) {
                warn("classes " + std::to_string(specs[a].class_id) + " and " + std::to_string(specs[b].class_id) +
                     " have means closer than 2 sd; they may be inseparable");
            }
        }
    }
}

}  // namespace

SyntheticData gen_structured(const std::vector<ClassSpec>& specs, std::size_t total_features, SeededRng& rng) {
    if (specs.empty()) {
        throw std::invalid_argument("gen_structured: no class specs");
    }
    std::size_t rows = 0;
    RelevanceTruth truth;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& s = specs[k];
        if (s.class_id != static_cast<int>(k) + 1) {
            throw std::invalid_argument("class specs must be ordered with ids 1..K");
        }
        if (s.samples == 0) {
            throw std::invalid_argument("class " + std::to_string(s.class_id) + " has no samples");
        }
        if (s.means.size() != s.relevant.size() || s.sds.size() != s.relevant.size()) {
            throw std::invalid_argument("class " + std::to_string(s.class_id) + ": means/sds do not match relevant");
        }
        for (auto f : s.relevant) {
            if (f >= total_features) {
                throw std::invalid_argument("relevant feature index exceeds feature count");
            }
        }
        truth.per_class[s.class_id] = FeatureSet(s.relevant.begin(), s.relevant.end());
        rows += s.samples;
    }
    warn_on_overlap(specs);

    Matrix m(rows, total_features);
    std::vector<int> labels;
    labels.reserve(rows);
    std::size_t r = 0;
    std::vector<int> slot(total_features);
    for (const auto& s : specs) {
        std::fill(slot.begin(), slot.end(), -1);
        for (std::size_t i = 0; i < s.relevant.size(); ++i) {
            slot[s.relevant[i]] = static_cast<int>(i);
        }
        for (std::size_t n = 0; n < s.samples; ++n, ++r) {
            for (std::size_t f = 0; f < total_features; ++f) {
                const int i = slot[f];
                m(r, f) = i >= 0 ? s.means[static_cast<std::size_t>(i)] +
                                       s.sds[static_cast<std::size_t>(i)] * rng.normal()
                                 : s.noise.draw(rng);
            }
            labels.push_back(s.class_id);
        }
    }
    SyntheticData out{Dataset(std::move(m), std::move(labels)), std::move(truth), {}};
    out.config = {{"generator", "structured"},
                  {"features", total_features},
                  {"seed", rng.seed()},
                  {"classes", specs_json(specs)}};
    return out;
}

SyntheticData gen_shapes(const ShapeOptions& o, SeededRng& rng) {
    if (o.samples == 0) {
        throw std::invalid_argument("gen_shapes: sample count must be positive");
    }
    if (o.noise_level < 0.0) {
        throw std::invalid_argument("gen_shapes: noise level must be non-negative");
    }
    const double jitter = o.noise_level / 100.0;  // every shape has unit characteristic scale
    std::size_t informative = 2;
    int classes = 2;
    std::vector<std::size_t> per_class;
    std::vector<std::vector<double>> centers;

    switch (o.shape) {
        case Shape::Moons:
            per_class = {o.samples - o.samples / 2, o.samples / 2};
            break;
        case Shape::Circles: {
            const std::size_t outer = o.samples * 3 / 7;
            per_class = {outer, o.samples - outer};
            break;
        }
        case Shape::Blobs: {
            if (o.centers < 2 || o.informative < 1) {
                throw std::invalid_argument("gen_shapes: blobs need >= 2 centers and >= 1 informative feature");
            }
            classes = o.centers;
            informative = static_cast<std::size_t>(o.informative);
            for (int c = 0; c < classes; ++c) {
                per_class.push_back(o.samples / static_cast<std::size_t>(classes) +
                                    (static_cast<std::size_t>(c) < o.samples % static_cast<std::size_t>(classes)));
            }
            // Centres in [-10,10]^informative. Redraw until every informative
            // dimension spreads the centres over at least 8 units, so no
            // informative feature is degenerate by accident.
            for (int attempt = 0;; ++attempt) {
                centers.assign(static_cast<std::size_t>(classes), std::vector<double>(informative));
                for (auto& c : centers) {
                    for (auto& v : c) {
                        v = rng.uniform(-10.0, 10.0);
                    }
                }
                bool ok = true;
                for (std::size_t f = 0; f < informative && ok; ++f) {
                    double lo = centers[0][f], hi = lo;
                    for (const auto& c : centers) {
                        lo = std::min(lo, c[f]);
                        hi = std::max(hi, c[f]);
                    }
                    ok = hi - lo >= 8.0;
                }
                if (ok || attempt > 1000) {
                    break;
                }
            }
            break;
        }
    }

    const std::size_t total = informative + o.noise_features;
    Matrix m(o.samples, total);
    std::vector<int> labels;
    labels.reserve(o.samples);
    std::size_t r = 0;
    for (int c = 0; c < classes; ++c) {
        const std::size_t n_c = per_class[static_cast<std::size_t>(c)];
        for (std::size_t n = 0; n < n_c; ++n, ++r) {
            auto row = m.row(r);
            if (o.shape == Shape::Moons) {
                const double t = n_c > 1 ? std::numbers::pi * static_cast<double>(n) / static_cast<double>(n_c - 1) : 0.0;
                row[0] = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
                row[1] = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
            } else if (o.shape == Shape::Circles) {
                const double t = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(n_c);
                const double radius = c == 0 ? 1.0 : 0.5;
                row[0] = radius * std::cos(t);
                row[1] = radius * std::sin(t);
            } else {
                for (std::size_t f = 0; f < informative; ++f) {
                    row[f] = rng.normal(centers[static_cast<std::size_t>(c)][f], 1.0);
                }
            }
            if (jitter > 0.0) {
                for (std::size_t f = 0; f < informative; ++f) {
                    row[f] += rng.normal(0.0, jitter);
                }
            }
            for (std::size_t f = informative; f < total; ++f) {
                row[f] = rng.uniform();
            }
            labels.push_back(c + 1);
        }
    }

    RelevanceTruth truth;
    FeatureSet signal;
    for (std::size_t f = 0; f < informative; ++f) {
        signal.insert(f);
    }
    for (int c = 1; c <= classes; ++c) {
        truth.per_class[c] = signal;
    }
    const char* name = o.shape == Shape::Moons ? "moons" : o.shape == Shape::Circles ? "circles" : "blobs";
    SyntheticData out{Dataset(std::move(m), std::move(labels)), std::move(truth), {}};
    out.config = {{"generator", "shapes"},
                  {"shape", name},
                  {"samples", o.samples},
                  {"noise_features", o.noise_features},
                  {"noise_level", o.noise_level},
                  {"seed", rng.seed()}};
    if (o.shape == Shape::Blobs) {
        out.config["centers"] = centers;
    }
    return out;
}

DistanceTable distance_table(const Dataset& d) {
    const int k = d.num_classes();
    if (k < 2) {
        throw std::invalid_argument("distance_table needs at least two classes");
    }
    std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(k));
    for (int c = 1; c <= k; ++c) {
        rows[static_cast<std::size_t>(c - 1)] = d.rows_of_class(c);
    }
    DistanceTable t{std::vector<std::vector<double>>(static_cast<std::size_t>(k), std::vector<double>(k, 0.0))};
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            double sum = 0.0;
            for (auto i : rows[static_cast<std::size_t>(a)]) {
                const auto x = d.row(i);
                for (auto j : rows[static_cast<std::size_t>(b)]) {
                    const auto y = d.row(j);
                    double sq = 0.0;
                    for (std::size_t f = 0; f < x.size(); ++f) {
                        const double diff = x[f] - y[f];
                        sq += diff * diff;
                    }
                    sum += std::sqrt(sq);
                }
            }
            const double mean = sum / static_cast<double>(rows[static_cast<std::size_t>(a)].size() *
                                                          rows[static_cast<std::size_t>(b)].size());
            t.values[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = mean;
            t.values[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = mean;
        }
    }
    return t;
}

namespace {

// Expected squared spread contributed to a cross-class pair distance by
// within-class variation (relevant sds and noise variance).
double pair_spread(const ClassSpec& a, const ClassSpec& b, std::size_t features) {
    auto class_var = [features](const ClassSpec& s) {
        std::vector<double> v(features);
        const double noise_var = s.noise.kind == NoiseModel::Kind::Uniform
                                     ? (s.noise.b - s.noise.a) * (s.noise.b - s.noise.a) / 12.0
                                     : s.noise.b * s.noise.b;
        std::fill(v.begin(), v.end(), noise_var);
        for (std::size_t i = 0; i < s.relevant.size(); ++i) {
            v[s.relevant[i]] = s.sds[i] * s.sds[i];
        }
        return v;
    };
    const auto va = class_var(a);
    const auto vb = class_var(b);
    double s = 0.0;
    for (std::size_t f = 0; f < features; ++f) {
        s += va[f] + vb[f];
    }
    return s;
}

}  // namespace

InterclassResult gen_interclass(const std::vector<ClassSpec>& base, std::pair<int, int> squeeze, double factor,
                                SeededRng& rng) {
    if (factor < 0.0) {
        throw std::invalid_argument("gen_interclass: factor must be non-negative");
    }
    const auto [moved, anchor] = squeeze;
    if (moved < 1 || anchor < 1 || moved > static_cast<int>(base.size()) || anchor > static_cast<int>(base.size()) ||
        moved == anchor) {
        throw std::invalid_argument("gen_interclass: squeeze pair must name two distinct classes");
    }
    auto specs = base;
    auto& a = specs[static_cast<std::size_t>(moved - 1)];
    const auto& b = specs[static_cast<std::size_t>(anchor - 1)];
    if (a.relevant != b.relevant) {
        throw std::invalid_argument("gen_interclass: squeezed classes must share relevant features");
    }
    std::size_t features = 0;
    for (const auto& s : specs) {
        for (auto f : s.relevant) {
            features = std::max(features, f + 1);
        }
    }
    features += 4;  // irrelevant inputs

    double gap_sq = 0.0;
    for (std::size_t i = 0; i < a.means.size(); ++i) {
        gap_sq += (a.means[i] - b.means[i]) * (a.means[i] - b.means[i]);
    }
    const double gap = std::sqrt(gap_sq);
    const double spread = pair_spread(a, b, features);
    // Mean pair distance ~ sqrt(gap^2 + spread); shrink that by the factor
    // and solve for the centroid gap.
    const double base_distance = std::sqrt(gap_sq + spread);
    const double target = base_distance * std::pow(3.2 / 15.8, factor / 2.0);
    const double new_gap_sq = target * target - spread;
    if (factor > 0.0) {
        if (!(new_gap_sq > 1e-12) || gap <= 0.0) {
            throw std::invalid_argument("gen_interclass: squeeze leaves the class centroids coincident");
        }
        const double scale = std::sqrt(new_gap_sq) / gap;
        for (std::size_t i = 0; i < a.means.size(); ++i) {
            a.means[i] = b.means[i] + (a.means[i] - b.means[i]) * scale;
        }
    }
    InterclassResult out{gen_structured(specs, features, rng), {}};
    out.synthetic.config["generator"] = "interclass";
    out.synthetic.config["squeeze"] = {moved, anchor};
    out.synthetic.config["factor"] = factor;
    out.distances = distance_table(out.synthetic.data);
    return out;
}

namespace {

// Structured presets. Relevant features ~ N(mean, kRelevantSd); features a
// class does not use are U[0, kRange]. Class c's mean on feature f sits at
// kRange * (kMeanLow + kMeanStep * ((c + f) mod 5)), so classes that share a
// feature never share its mean.
constexpr double kRange = 20.0;
constexpr double kMeanLow = 0.25;
constexpr double kMeanStep = 0.125;
constexpr double kRelevantSd = 1.5;

ClassSpec structured_class(int class_id, std::size_t samples, std::vector<std::size_t> relevant) {
    ClassSpec s;
    s.class_id = class_id;
    s.samples = samples;
    for (auto f : relevant) {
        const auto slot = static_cast<double>((static_cast<std::size_t>(class_id - 1) + f) % 5);
        s.means.push_back(kRange * (kMeanLow + kMeanStep * slot));
        s.sds.push_back(kRelevantSd);
    }
    s.relevant = std::move(relevant);
    s.noise = {NoiseModel::Kind::Uniform, 0.0, kRange};
    return s;
}

std::vector<std::size_t> zero_based(std::initializer_list<std::size_t> one_based) {
    std::vector<std::size_t> v;
    for (auto f : one_based) {
        v.push_back(f - 1);
    }
    return v;
}

// 2442 samples over 5 classes.
constexpr std::size_t kStructuredCounts[5] = {489, 489, 488, 488, 488};

// D4: 6 classes x 200 samples, 12 relevant features, 4 irrelevant inputs.
// Centroids sit on the diagonal of the relevant subspace, kD4Spacing apart.
constexpr double kD4Spacing = 16.8;
constexpr double kD4Sd = 0.3;
constexpr double kD4NoiseWidth = 2.0;

std::vector<ClassSpec> d4_line() {
    std::vector<ClassSpec> specs;
    const double step = kD4Spacing / std::sqrt(12.0);
    for (int c = 1; c <= 6; ++c) {
        ClassSpec s;
        s.class_id = c;
        s.samples = 200;
        for (std::size_t f = 0; f < 12; ++f) {
            s.relevant.push_back(f);
            s.means.push_back(step * static_cast<double>(c - 1));
            s.sds.push_back(kD4Sd);
        }
        s.noise = {NoiseModel::Kind::Uniform, 0.0, kD4NoiseWidth};
        specs.push_back(std::move(s));
    }
    return specs;
}

}  // namespace

std::vector<ClassSpec> preset_specs(const std::string& name) {
    std::vector<std::vector<std::size_t>> rel;
    if (name == "d1") {
        rel.assign(5, zero_based({1, 2, 3, 4}));
    } else if (name == "d2") {
        rel = {zero_based({1, 2, 3}), zero_based({1, 2, 3}), zero_based({2, 4, 5}), zero_based({1, 3, 5, 6}),
               zero_based({1, 3, 4, 7})};
    } else if (name == "d3") {
        rel = {zero_based({1, 2, 3}), zero_based({4, 5, 6}), zero_based({2, 3, 4, 5}), zero_based({6, 7, 8}),
               zero_based({1, 4, 8})};
    } else if (name == "d4") {
        return d4_line();
    } else {
        throw std::invalid_argument("no structured specs for preset '" + name + "'");
    }
    std::vector<ClassSpec> specs;
    for (int c = 1; c <= 5; ++c) {
        specs.push_back(structured_class(c, kStructuredCounts[c - 1], rel[static_cast<std::size_t>(c - 1)]));
    }
    return specs;
}

std::size_t preset_feature_count(const std::string& name) {
    if (name == "d1") return 12;
    if (name == "d2") return 28;
    if (name == "d3") return 15;
    if (name == "d4") return 16;
    if (name == "moons" || name == "circles" || name == "blobs") return 20;
    if (name == "blobs-xl") return 1000;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"d1", "d2", "d3", "d4", "moons", "circles", "blobs", "blobs-xl"};
    return names;
}

bool is_preset(const std::string& name) {
    const auto& n = preset_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

SyntheticData make_preset(const std::string& name, SeededRng& rng, std::size_t features) {
    SyntheticData out;
    if (name == "d1" || name == "d2" || name == "d3") {
        out = gen_structured(preset_specs(name), preset_feature_count(name), rng);
    } else if (name == "d4") {
        auto r = gen_interclass(d4_line(), {1, 2}, 2.0, rng);
        out = std::move(r.synthetic);
        out.config["distance_table"] = r.distances.values;
    } else if (name == "moons") {
        out = gen_shapes({Shape::Moons, 2500, 18, 0.0}, rng);
    } else if (name == "circles") {
        out = gen_shapes({Shape::Circles, 1750, 18, 0.0}, rng);
    } else if (name == "blobs") {
        out = gen_shapes({Shape::Blobs, 1385, 14, 0.0, 4, 6}, rng);
    } else if (name == "blobs-xl") {
        const std::size_t total = features ? features : 1000;
        if (total < 6) {
            throw std::invalid_argument("blobs-xl needs at least 6 features");
        }
        out = gen_shapes({Shape::Blobs, 5000, total - 6, 0.0, 4, 6}, rng);
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    out.config["preset"] = name;
    return out;
}

}  // namespace fsbench
