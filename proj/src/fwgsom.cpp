#include "fsbench/fwgsom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsbench/diagnostics.hpp"

namespace fsbench {

ClassNodeRoles class_roles(const HitMatrix& hits, int class_id) {
    if (class_id < 1 || class_id > hits.classes()) {
        throw std::invalid_argument("class id out of range");
    }
    ClassNodeRoles roles;
    roles.class_id = class_id;
    std::size_t best = 0;
    for (std::size_t j = 0; j < hits.nodes(); ++j) {
        if (hits.at(j, class_id) > best) {
            best = hits.at(j, class_id);
            roles.lead = j;
        }
    }
    if (best == 0) {
        throw std::invalid_argument("class " + std::to_string(class_id) + " has no mapped samples");
    }
    for (std::size_t j = 0; j < hits.nodes(); ++j) {
        if (j == roles.lead) {
            continue;
        }
        (hits.at(j, class_id) > 0 ? roles.associates : roles.dissociates).push_back(j);
    }
    return roles;
}

namespace {

std::vector<double> column_variance(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    std::vector<double> mean(dim, 0.0);
    std::vector<double> var(dim, 0.0);
    if (rows.size() < 2) {
        return var;
    }
    for (const auto& r : rows) {
        for (std::size_t f = 0; f < dim; ++f) {
            mean[f] += r[f];
        }
    }
    const double n = static_cast<double>(rows.size());
    for (auto& m : mean) {
        m /= n;
    }
    for (const auto& r : rows) {
        for (std::size_t f = 0; f < dim; ++f) {
            const double dev = r[f] - mean[f];
            var[f] += dev * dev;
        }
    }
    for (auto& v : var) {
        v /= n;
    }
    return var;
}

// Mean of the class's samples whose BMU is `node`.
std::vector<double> mapped_class_mean(const Dataset& d, std::span<const std::size_t> assignment, int class_id,
                                      std::size_t node) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == node && d.label(i) == class_id) {
            rows.push_back(i);
        }
    }
    return class_mean(d, class_id, std::span<const std::size_t>(rows));
}

std::vector<double> abs_diff(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t f = 0; f < a.size(); ++f) {
        out[f] = std::abs(a[f] - b[f]);
    }
    return out;
}

}  // namespace

FeatureSpread similarity_matrix(const Network& net, const Dataset& d, std::span<const std::size_t> assignment,
                                const ClassNodeRoles& roles) {
    FeatureSpread s;
    const auto& lead_w = net.node(roles.lead).weights;
    s.nodes.push_back(roles.lead);
    s.nodes.insert(s.nodes.end(), roles.associates.begin(), roles.associates.end());
    for (auto m : s.nodes) {
        s.distances.push_back(abs_diff(mapped_class_mean(d, assignment, roles.class_id, m), lead_w));
    }
    s.variance = column_variance(s.distances, d.features());
    return s;
}

std::optional<FeatureSpread> dissimilarity_matrix(const Network& net, const Dataset& d,
                                                  std::span<const std::size_t> assignment,
                                                  const ClassNodeRoles& roles) {
    if (roles.dissociates.empty()) {
        return std::nullopt;
    }
    FeatureSpread s;
    const auto lead_mean = mapped_class_mean(d, assignment, roles.class_id, roles.lead);
    for (auto m : roles.dissociates) {
        s.nodes.push_back(m);
        s.distances.push_back(abs_diff(lead_mean, net.node(m).weights));
    }
    s.variance = column_variance(s.distances, d.features());
    return s;
}

PercentageChange percentage_change(std::span<const double> sim_var, std::span<const double> dis_var,
                                   double epsilon) {
    if (sim_var.size() != dis_var.size()) {
        throw std::invalid_argument("variance vectors differ in length");
    }
    PercentageChange pc;
    pc.delta.resize(sim_var.size());
    for (std::size_t f = 0; f < sim_var.size(); ++f) {
        pc.delta[f] = 100.0 * (dis_var[f] - sim_var[f]) / std::max(sim_var[f], epsilon);
        if (pc.delta[f] > 0.0) {
            pc.relevant.insert(f);
        }
    }
    return pc;
}

void apply_weights(Network& net, const ClassNodeRoles& roles, const FeatureSet& relevant, WeightingPolicy policy,
                   double attenuation) {
    if (relevant.empty()) {
        warn("class " + std::to_string(roles.class_id) + ": empty relevant set, node masks left unchanged");
        return;
    }
    auto touch = [&](std::size_t j) {
        auto& mask = net.node(j).mask;
        for (std::size_t f = 0; f < mask.size(); ++f) {
            const bool keep = relevant.count(f) > 0;
            if (policy == WeightingPolicy::Binary) {
                mask[f] = keep ? 1.0 : 0.0;
            } else if (!keep) {
                mask[f] *= attenuation;
            }
        }
    };
    touch(roles.lead);
    for (auto j : roles.associates) {
        touch(j);
    }
}

DiagnosisAccuracy diagnosis_accuracy(const HitMatrix& hits) {
    DiagnosisAccuracy acc;
    const int k = hits.classes();
    acc.node_labels.assign(hits.nodes(), 0);
    std::vector<std::size_t> correct(static_cast<std::size_t>(k), 0);
    std::size_t total_correct = 0;
    for (std::size_t j = 0; j < hits.nodes(); ++j) {
        std::size_t best = 0;
        for (int c = 1; c <= k; ++c) {
            if (hits.at(j, c) > best) {
                best = hits.at(j, c);
                acc.node_labels[j] = c;
            }
        }
        if (best > 0) {
            correct[static_cast<std::size_t>(acc.node_labels[j] - 1)] += best;
            total_correct += best;
        }
    }
    acc.per_class.resize(static_cast<std::size_t>(k));
    for (int c = 1; c <= k; ++c) {
        const auto n = hits.class_total(c);
        acc.per_class[static_cast<std::size_t>(c - 1)] =
            n ? static_cast<double>(correct[static_cast<std::size_t>(c - 1)]) / static_cast<double>(n) : 0.0;
    }
    const auto n = hits.total();
    acc.overall = n ? static_cast<double>(total_correct) / static_cast<double>(n) : 0.0;
    return acc;
}

const char* to_string(ClassStatus s) {
    switch (s) {
        case ClassStatus::Initial:
            return "initial";
        case ClassStatus::Evaluated:
            return "evaluated";
        case ClassStatus::NoAssociates:
            return "no_associates";
        case ClassStatus::NotSeparable:
            return "not_separable";
    }
    return "unknown";
}

FwgsomResult fwgsom_run(const Dataset& d, const FwgsomConfig& config, SeededRng& rng) {
    if (config.max_iterations < 1) {
        throw std::invalid_argument("max_iterations must be >= 1");
    }
    if (!(config.target_accuracy > 0.0 && config.target_accuracy <= 1.0)) {
        throw std::invalid_argument("target_accuracy must lie in (0,1]");
    }
    FwgsomResult result;
    result.seed = rng.seed();
    result.network = train_gsom(d, config.gsom, rng);
    Network& net = result.network;
    const int k = d.num_classes();

    FeatureSet all;
    for (std::size_t f = 0; f < d.features(); ++f) {
        all.insert(f);
    }
    for (int c = 1; c <= k; ++c) {
        result.relevant[c] = all;
    }

    auto assignment = assign(net, d);
    auto hits = hit_matrix_from(assignment, d, net.size());
    auto acc = diagnosis_accuracy(hits);

    IterationRecord first{1, {}, acc.overall, hits};
    for (int c = 1; c <= k; ++c) {
        first.classes.push_back({c, ClassStatus::Initial, {}, all, acc.per_class[static_cast<std::size_t>(c - 1)]});
    }
    result.trace.push_back(std::move(first));

    // With two or more classes the first analysis pass always runs, even when
    // the fresh map already meets the target: otherwise no feature would ever
    // be weighted.
    while (static_cast<int>(result.trace.size()) < config.max_iterations &&
           ((result.trace.size() == 1 && k > 1) || acc.overall < config.target_accuracy)) {
        IterationRecord rec;
        rec.iteration = static_cast<int>(result.trace.size()) + 1;
        // Analyse every class on the same assignment, then apply all masks.
        std::vector<std::pair<ClassNodeRoles, FeatureSet>> updates;
        for (int c = 1; c <= k; ++c) {
            ClassRecord cr{c, ClassStatus::Evaluated, {}, {}, 0.0};
            const auto roles = class_roles(hits, c);
            if (roles.associates.empty()) {
                cr.status = ClassStatus::NoAssociates;
                cr.relevant = result.relevant[c];
            } else if (auto dis = dissimilarity_matrix(net, d, assignment, roles)) {
                const auto sim = similarity_matrix(net, d, assignment, roles);
                auto pc = percentage_change(sim.variance, dis->variance, config.epsilon);
                cr.delta = pc.delta;
                cr.relevant = pc.relevant;
                result.delta[c] = pc.delta;
                result.relevant[c] = pc.relevant;
                updates.emplace_back(roles, pc.relevant);
            } else {
                cr.status = ClassStatus::NotSeparable;
                cr.relevant = all;
                result.relevant[c] = all;
            }
            rec.classes.push_back(std::move(cr));
        }
        for (const auto& [roles, relevant] : updates) {
            apply_weights(net, roles, relevant, config.policy, config.attenuation);
        }
        assignment = assign(net, d);
        hits = hit_matrix_from(assignment, d, net.size());
        acc = diagnosis_accuracy(hits);
        for (auto& cr : rec.classes) {
            cr.accuracy = acc.per_class[static_cast<std::size_t>(cr.class_id - 1)];
        }
        rec.overall_accuracy = acc.overall;
        rec.hits = hits;
        result.trace.push_back(std::move(rec));
    }
    result.class_accuracy = acc.per_class;
    result.overall_accuracy = acc.overall;
    return result;
}

namespace {

nlohmann::json one_based(const FeatureSet& s) {
    auto arr = nlohmann::json::array();
    for (auto f : s) {
        arr.push_back(f + 1);
    }
    return arr;
}

}  // namespace

nlohmann::json to_json(const FwgsomResult& r, bool include_hits) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [c, set] : r.relevant) {
        auto it = r.delta.find(c);
        classes[std::to_string(c)] = {
            {"relevant", one_based(set)},
            {"delta", it == r.delta.end() ? nlohmann::json::array() : nlohmann::json(it->second)},
            {"accuracy", r.class_accuracy.empty() ? 0.0 : r.class_accuracy[static_cast<std::size_t>(c - 1)]}};
    }
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& it : r.trace) {
        nlohmann::json cls = nlohmann::json::array();
        for (const auto& cr : it.classes) {
            cls.push_back({{"class", cr.class_id},
                           {"status", to_string(cr.status)},
                           {"relevant", one_based(cr.relevant)},
                           {"delta", cr.delta},
                           {"accuracy", cr.accuracy}});
        }
        nlohmann::json entry = {{"iteration", it.iteration}, {"overall_accuracy", it.overall_accuracy}, {"classes", cls}};
        if (include_hits) {
            nlohmann::json rows = nlohmann::json::array();
            for (std::size_t j = 0; j < it.hits.nodes(); ++j) {
                nlohmann::json row = nlohmann::json::array();
                for (int c = 1; c <= it.hits.classes(); ++c) {
                    row.push_back(it.hits.at(j, c));
                }
                rows.push_back(row);
            }
            entry["hits"] = rows;
        }
        trace.push_back(entry);
    }
    return {{"classes", classes},
            {"overall_accuracy", r.overall_accuracy},
            {"iterations", r.iterations()},
            {"seed", r.seed},
            {"trace", trace}};
}

}  // namespace fsbench
