#include "fsbench/filters.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fsbench/diagnostics.hpp"

namespace fsbench {

namespace {

double capped(double v) { return std::min(v, kScoreCap); }

std::vector<double> column(const Dataset& d, std::size_t f) {
    std::vector<double> out(d.samples());
    for (std::size_t i = 0; i < d.samples(); ++i) {
        out[i] = d.at(i, f);
    }
    return out;
}

std::vector<double> indicator(const Dataset& d, int class_id) {
    std::vector<double> out(d.samples());
    for (std::size_t i = 0; i < d.samples(); ++i) {
        out[i] = d.label(i) == class_id ? 1.0 : 0.0;
    }
    return out;
}

int code_count(std::span<const int> v) {
    int n = 0;
    for (int c : v) {
        if (c < 0) {
            throw std::invalid_argument("discrete codes must be non-negative");
        }
        n = std::max(n, c + 1);
    }
    return n;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: length mismatch");
    }
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) {
        return 0.0;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return 0.0;
    }
    return sxy / std::max(std::sqrt(sxx) * std::sqrt(syy), kVarianceFloor);
}

FeatureScores pearson_scores(const Dataset& d, bool per_class) {
    if (d.samples() < 2) {
        throw std::invalid_argument("pearson_scores: need at least 2 samples");
    }
    FeatureScores s;
    s.method = "pearson";
    std::vector<double> y(d.labels().begin(), d.labels().end());
    std::vector<std::vector<double>> cols;
    for (std::size_t f = 0; f < d.features(); ++f) {
        cols.push_back(column(d, f));
        s.scores.push_back(capped(std::abs(pearson(cols.back(), y))));
    }
    if (per_class) {
        for (int c = 1; c <= d.num_classes(); ++c) {
            const auto ind = indicator(d, c);
            auto& row = s.per_class[c];
            for (const auto& x : cols) {
                row.push_back(capped(std::abs(pearson(x, ind))));
            }
        }
    }
    apply_selection_rule(s);
    return s;
}

std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
    if (bins < 2) {
        throw std::invalid_argument("bins must be >= 2");
    }
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<int> raw(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) {
            ++j;
        }
        // A run of ties takes the bin of its first rank.
        const int b = static_cast<int>(i * static_cast<std::size_t>(bins) / n);
        for (std::size_t t = i; t < j; ++t) {
            raw[order[t]] = b;
        }
        i = j;
    }
    // Compact so that codes are dense when ties swallowed whole bins.
    std::vector<int> remap(static_cast<std::size_t>(bins), -1);
    int next = 0;
    for (std::size_t t = 0; t < n; ++t) {
        auto& m = remap[static_cast<std::size_t>(raw[order[t]])];
        if (m < 0) {
            m = next++;
        }
    }
    for (auto& r : raw) {
        r = remap[static_cast<std::size_t>(r)];
    }
    return raw;
}

double entropy(std::span<const int> y) {
    if (y.empty()) {
        return 0.0;
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(code_count(y)), 0);
    for (int v : y) {
        ++counts[static_cast<std::size_t>(v)];
    }
    const double n = static_cast<double>(y.size());
    double h = 0.0;
    for (auto c : counts) {
        if (c) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

double conditional_entropy(std::span<const int> y, std::span<const int> x) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("conditional_entropy: length mismatch");
    }
    const auto nx = static_cast<std::size_t>(code_count(x));
    std::vector<std::vector<int>> groups(nx);
    for (std::size_t i = 0; i < x.size(); ++i) {
        groups[static_cast<std::size_t>(x[i])].push_back(y[i]);
    }
    const double n = static_cast<double>(x.size());
    double h = 0.0;
    for (const auto& g : groups) {
        if (!g.empty()) {
            h += static_cast<double>(g.size()) / n * entropy(g);
        }
    }
    return h;
}

double mutual_information_joint(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("mutual_information: length mismatch");
    }
    if (x.empty()) {
        return 0.0;
    }
    const auto nx = static_cast<std::size_t>(code_count(x));
    const auto ny = static_cast<std::size_t>(code_count(y));
    std::vector<std::size_t> joint(nx * ny, 0), px(nx, 0), py(ny, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto a = static_cast<std::size_t>(x[i]);
        const auto b = static_cast<std::size_t>(y[i]);
        ++joint[a * ny + b];
        ++px[a];
        ++py[b];
    }
    const double n = static_cast<double>(x.size());
    double mi = 0.0;
    for (std::size_t a = 0; a < nx; ++a) {
        for (std::size_t b = 0; b < ny; ++b) {
            const auto c = joint[a * ny + b];
            if (c) {
                const double pxy = static_cast<double>(c) / n;
                const double pa = static_cast<double>(px[a]) / n;
                const double pb = static_cast<double>(py[b]) / n;
                mi += pxy * std::log(pxy / (pa * pb));
            }
        }
    }
    return std::max(mi, 0.0);
}

double mutual_information_entropy(std::span<const int> x, std::span<const int> y) {
    return std::max(entropy(y) - conditional_entropy(y, x), 0.0);
}

FeatureScores mutual_information_scores(const Dataset& d, int bins, bool per_class) {
    if (bins < 2) {
        throw std::invalid_argument("bins must be >= 2");
    }
    FeatureScores s;
    s.method = "mi";
    std::vector<int> y(d.labels().begin(), d.labels().end());
    std::vector<std::vector<int>> codes;
    for (std::size_t f = 0; f < d.features(); ++f) {
        codes.push_back(equal_frequency_bins(column(d, f), bins));
        s.scores.push_back(mutual_information_joint(codes.back(), y));
    }
    if (per_class) {
        for (int c = 1; c <= d.num_classes(); ++c) {
            std::vector<int> ind(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) {
                ind[i] = y[i] == c;
            }
            auto& row = s.per_class[c];
            for (const auto& x : codes) {
                row.push_back(mutual_information_joint(x, ind));
            }
        }
    }
    apply_selection_rule(s);
    return s;
}

double f_score(std::span<const double> positive, std::span<const double> negative) {
    if (positive.size() < 2 || negative.size() < 2) {
        throw std::invalid_argument("f_score: each group needs at least 2 values");
    }
    auto mean = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) {
            m += x;
        }
        return m / static_cast<double>(v.size());
    };
    auto spread = [](std::span<const double> v, double m) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - m) * (x - m);
        }
        return ss / static_cast<double>(v.size() - 1);
    };
    const double mp = mean(positive);
    const double mn = mean(negative);
    const double m = (mp * static_cast<double>(positive.size()) + mn * static_cast<double>(negative.size())) /
                     static_cast<double>(positive.size() + negative.size());
    const double num = (mp - m) * (mp - m) + (mn - m) * (mn - m);
    const double den = spread(positive, mp) + spread(negative, mn);
    return capped(num / std::max(den, kVarianceFloor));
}

FeatureScores f_scores(const Dataset& d) {
    FeatureScores s;
    s.method = "fscore";
    s.scores.assign(d.features(), 0.0);
    const int k = d.num_classes();
    int used = 0;
    for (int c = 1; c <= k; ++c) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < d.samples(); ++i) {
            (d.label(i) == c ? pos : neg).push_back(i);
        }
        if (pos.size() < 2 || neg.size() < 2) {
            warn("fscore: class " + std::to_string(c) + " has a group with fewer than 2 samples, skipped");
            continue;
        }
        auto& row = s.per_class[c];
        std::vector<double> xp(pos.size()), xn(neg.size());
        for (std::size_t f = 0; f < d.features(); ++f) {
            for (std::size_t i = 0; i < pos.size(); ++i) {
                xp[i] = d.at(pos[i], f);
            }
            for (std::size_t i = 0; i < neg.size(); ++i) {
                xn[i] = d.at(neg[i], f);
            }
            row.push_back(f_score(xp, xn));
            s.scores[f] += row.back();
        }
        ++used;
    }
    if (used > 0) {
        for (auto& v : s.scores) {
            v /= static_cast<double>(used);
        }
    }
    apply_selection_rule(s);
    return s;
}

namespace {

// Core ReliefF on normalised data with labels 1..K.
std::vector<double> relieff_weights(const Dataset& nd, std::span<const int> labels, int k_classes, int k_neighbors) {
    const std::size_t n = nd.samples();
    const std::size_t dim = nd.features();
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k_classes));
    for (std::size_t i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
    }
    std::vector<double> prior(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
        prior[c] = static_cast<double>(members[c].size()) / static_cast<double>(n);
    }

    std::vector<double> w(dim, 0.0);
    std::vector<double> dist(n);
    std::vector<std::size_t> cand;
    std::vector<double> hit_sum(dim), miss_sum(dim), miss_total(dim);
    const double m = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = nd.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto xj = nd.row(j);
            double s = 0.0;
            for (std::size_t f = 0; f < dim; ++f) {
                const double diff = xi[f] - xj[f];
                s += diff * diff;
            }
            dist[j] = s;
        }
        const auto own = static_cast<std::size_t>(labels[i] - 1);
        std::fill(miss_total.begin(), miss_total.end(), 0.0);
        std::fill(hit_sum.begin(), hit_sum.end(), 0.0);
        std::size_t hits_used = 0;
        for (std::size_t c = 0; c < members.size(); ++c) {
            cand.clear();
            for (auto j : members[c]) {
                if (j != i) {
                    cand.push_back(j);
                }
            }
            const std::size_t kc = std::min(cand.size(), static_cast<std::size_t>(k_neighbors));
            if (kc == 0) {
                continue;
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kc), cand.end(),
                              [&](auto a, auto b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
            auto& acc = c == own ? hit_sum : miss_sum;
            if (c != own) {
                std::fill(miss_sum.begin(), miss_sum.end(), 0.0);
            }
            for (std::size_t t = 0; t < kc; ++t) {
                const auto xj = nd.row(cand[t]);
                for (std::size_t f = 0; f < dim; ++f) {
                    acc[f] += std::abs(xi[f] - xj[f]);
                }
            }
            if (c == own) {
                hits_used = kc;
            } else {
                const double scale = prior[c] / (1.0 - prior[own]) / static_cast<double>(kc);
                for (std::size_t f = 0; f < dim; ++f) {
                    miss_total[f] += scale * miss_sum[f];
                }
            }
        }
        for (std::size_t f = 0; f < dim; ++f) {
            const double hit = hits_used ? hit_sum[f] / static_cast<double>(hits_used) : 0.0;
            w[f] += (miss_total[f] - hit) / m;
        }
    }
    return w;
}

}  // namespace

FeatureScores relieff_scores(const Dataset& d, int k_neighbors, bool per_class) {
    if (k_neighbors < 1) {
        throw std::invalid_argument("k_neighbors must be >= 1");
    }
    if (d.num_classes() < 2) {
        throw DataError("relieff needs at least 2 classes (no misses exist)");
    }
    const Dataset nd = d.normalized() ? d : normalize_min_max(d);
    for (auto c : nd.class_counts()) {
        if (c < static_cast<std::size_t>(k_neighbors) + 1) {
            warn("relieff: a class has fewer than k+1 samples; k clipped for that class");
            break;
        }
    }
    FeatureScores s;
    s.method = "relieff";
    s.scores = relieff_weights(nd, nd.labels(), nd.num_classes(), k_neighbors);
    if (per_class) {
        for (int c = 1; c <= nd.num_classes(); ++c) {
            std::vector<int> ovr(nd.samples());
            for (std::size_t i = 0; i < nd.samples(); ++i) {
                ovr[i] = nd.label(i) == c ? 1 : 2;
            }
            s.per_class[c] = relieff_weights(nd, ovr, 2, k_neighbors);
        }
    }
    apply_selection_rule(s);
    return s;
}

const std::vector<std::string>& filter_methods() {
    static const std::vector<std::string> names{"pearson", "mi", "fscore", "relieff"};
    return names;
}

bool is_filter_method(const std::string& method) {
    const auto& m = filter_methods();
    return std::find(m.begin(), m.end(), method) != m.end();
}

void apply_selection_rule(FeatureScores& s, std::optional<std::size_t> top_k) {
    s.threshold = s.scores.empty() ? 0.0
                                   : std::accumulate(s.scores.begin(), s.scores.end(), 0.0) /
                                         static_cast<double>(s.scores.size());
    s.selected.clear();
    s.top_k = top_k;
    if (top_k) {
        std::vector<std::size_t> order(s.scores.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.scores[a] > s.scores[b]; });
        order.resize(std::min(*top_k, order.size()));
        s.selected.insert(order.begin(), order.end());
        return;
    }
    for (std::size_t f = 0; f < s.scores.size(); ++f) {
        if (s.scores[f] > s.threshold) {
            s.selected.insert(f);
        }
    }
}

FeatureScores select(const std::string& method, const Dataset& d, const SelectParams& params) {
    const auto t0 = std::chrono::steady_clock::now();
    FeatureScores s;
    if (method == "pearson") {
        s = pearson_scores(d, params.per_class);
    } else if (method == "mi") {
        s = mutual_information_scores(d, params.bins, params.per_class);
    } else if (method == "fscore") {
        s = f_scores(d);
    } else if (method == "relieff") {
        s = relieff_scores(d, params.k_neighbors, params.per_class);
    } else {
        throw std::invalid_argument("unknown filter method '" + method + "'");
    }
    if (params.top_k) {
        apply_selection_rule(s, params.top_k);
    }
    s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

nlohmann::json to_json(const FeatureScores& s) {
    auto selected = nlohmann::json::array();
    for (auto f : s.selected) {
        selected.push_back(f + 1);
    }
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [c, v] : s.per_class) {
        per_class[std::to_string(c)] = v;
    }
    nlohmann::json j = {{"method", s.method},
                        {"scores", s.scores},
                        {"threshold", s.threshold},
                        {"selected", selected},
                        {"per_class", per_class},
                        {"runtime_seconds", s.runtime_seconds}};
    if (s.top_k) {
        j["top_k"] = *s.top_k;
    }
    return j;
}

}  // namespace fsbench
