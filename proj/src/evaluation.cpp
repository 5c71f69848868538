#include "fsbench/evaluation.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace fsbench {

namespace {

FsClassMetrics class_metrics(int c, const FeatureSet& sel, const RelevanceTruth& truth, const FeatureSet& noise,
                             std::size_t feature_count) {
    const auto it = truth.per_class.find(c);
    if (it == truth.per_class.end()) {
        throw DataError("truth has no entry for class " + std::to_string(c));
    }
    const FeatureSet& own = it->second;
    FsClassMetrics m;
    m.class_id = c;
    for (auto f : sel) {
        if (f >= feature_count) {
            throw std::out_of_range("selected feature index " + std::to_string(f + 1) + " out of range");
        }
        ++m.sf;
        if (own.count(f)) {
            ++m.csf;
        } else if (noise.count(f)) {
            ++m.nf;
        } else {
            ++m.af;
        }
    }
    const double t = static_cast<double>(own.size());
    if (t == 0.0) {
        m.fs_accuracy = m.sf == 0 ? 1.0 : 0.0;
    } else if (m.nf == 0 && m.af == 0) {
        m.fs_accuracy = static_cast<double>(m.csf) / t;
    } else {
        m.fs_accuracy = static_cast<double>(m.csf) / (t + static_cast<double>(m.nf + m.af));
    }
    return m;
}

}  // namespace

std::vector<FsClassMetrics> fs_metrics(const std::map<int, FeatureSet>& selected, const RelevanceTruth& truth,
                                       std::size_t feature_count) {
    const auto noise = truth.noise_features(feature_count);
    std::vector<FsClassMetrics> out;
    for (const auto& [c, own] : truth.per_class) {
        (void)own;
        const auto it = selected.find(c);
        if (it == selected.end()) {
            throw DataError("no selection for class " + std::to_string(c));
        }
        out.push_back(class_metrics(c, it->second, truth, noise, feature_count));
    }
    return out;
}

std::vector<FsClassMetrics> fs_metrics(const FeatureSet& selected, const RelevanceTruth& truth,
                                       std::size_t feature_count) {
    std::map<int, FeatureSet> per;
    for (const auto& [c, own] : truth.per_class) {
        (void)own;
        per[c] = selected;
    }
    return fs_metrics(per, truth, feature_count);
}

nlohmann::json to_json(const FsClassMetrics& m) {
    return {{"class", m.class_id}, {"SF", m.sf},   {"CSF", m.csf},
            {"NF", m.nf},          {"AF", m.af},   {"fs_accuracy", m.fs_accuracy}};
}

Split stratified_split(const Dataset& d, double train_fraction, SeededRng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie in (0,1)");
    }
    std::vector<std::size_t> train, test;
    for (int c = 1; c <= d.num_classes(); ++c) {
        auto rows = d.rows_of_class(c);
        rng.shuffle(rows);
        auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(rows.size())));
        if (rows.size() >= 2) {
            n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
        }
        train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    // Keep class ids aligned with the source even if a class vanishes from a side.
    return {d.subset(train), d.subset(test)};
}

const char* to_string(Classifier c) { return c == Classifier::Som ? "som" : "gsom"; }

double classify_eval(Classifier classifier, const Dataset& train, const Dataset& test, const FeatureSet& selected,
                     const ClassifyConfig& config, SeededRng& rng) {
    if (selected.empty()) {
        throw std::invalid_argument("classify_eval: empty feature selection");
    }
    if (test.samples() == 0) {
        throw std::invalid_argument("classify_eval: empty test set");
    }
    const std::vector<std::size_t> cols(selected.begin(), selected.end());
    const Dataset tr = normalize_min_max(train.project(cols));
    const Dataset te = normalize_with(test.project(cols), tr.source_ranges());

    const Network net =
        classifier == Classifier::Som ? train_som(tr, config.som, rng) : train_gsom(tr, config.gsom, rng);
    const auto hits = hit_matrix(net, tr);
    std::vector<int> label(net.size(), 0);
    for (std::size_t j = 0; j < net.size(); ++j) {
        std::size_t best = 0;
        for (int c = 1; c <= hits.classes(); ++c) {
            if (hits.at(j, c) > best) {
                best = hits.at(j, c);
                label[j] = c;
            }
        }
    }
    // Test labels are compared through class names, since subset() may
    // renumber classes on either side.
    std::size_t correct = 0;
    for (std::size_t i = 0; i < te.samples(); ++i) {
        const auto x = te.row(i);
        std::size_t node = bmu(net, x).node;
        if (label[node] == 0) {
            double best = INFINITY;
            for (std::size_t j = 0; j < net.size(); ++j) {
                if (label[j] == 0) {
                    continue;
                }
                const double dist = masked_sq_distance(net.node(j), x);
                if (dist < best) {
                    best = dist;
                    node = j;
                }
            }
        }
        if (label[node] != 0 &&
            tr.class_names()[static_cast<std::size_t>(label[node] - 1)] ==
                te.class_names()[static_cast<std::size_t>(te.label(i) - 1)]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(te.samples());
}

std::vector<double> TrialSummary::values() const {
    std::vector<double> v;
    for (const auto& t : trials) {
        if (t.value) {
            v.push_back(*t.value);
        }
    }
    return v;
}

std::vector<std::uint64_t> TrialSummary::seeds() const {
    std::vector<std::uint64_t> s;
    for (const auto& t : trials) {
        s.push_back(t.seed);
    }
    return s;
}

std::pair<double, double> mean_stddev(const std::vector<double>& v) {
    if (v.empty()) {
        return {0.0, 0.0};
    }
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
        return {v.front(), 0.0};  // exact, free of summation rounding
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

TrialSummary run_trials(const std::string& method, const std::string& dataset,
                        const std::function<double(std::uint64_t)>& task, int trials, std::uint64_t base_seed,
                        int jobs) {
    if (trials < 1) {
        throw std::invalid_argument("trials must be >= 1");
    }
    TrialSummary s;
    s.method = method;
    s.dataset = dataset;
    s.trials.resize(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        s.trials[static_cast<std::size_t>(i)].seed = base_seed + static_cast<std::uint64_t>(i);
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < s.trials.size();) {
            auto& t = s.trials[i];
            try {
                t.value = task(t.seed);
            } catch (const std::exception& e) {
                t.error = e.what();
            }
        }
    };
    const int n_jobs = std::clamp(jobs, 1, trials);
    if (n_jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < n_jobs; ++j) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& t : s.trials) {
        s.failures += t.value ? 0 : 1;
    }
    std::tie(s.mean, s.stddev) = mean_stddev(s.values());
    return s;
}

nlohmann::json to_json(const TrialSummary& s) {
    auto trials = nlohmann::json::array();
    for (const auto& t : s.trials) {
        nlohmann::json j = {{"seed", t.seed}};
        if (t.value) {
            j["value"] = *t.value;
        } else {
            j["value"] = nullptr;
            j["error"] = t.error;
        }
        trials.push_back(j);
    }
    return {{"method", s.method}, {"dataset", s.dataset},  {"trials", trials},      {"mean", s.mean},
            {"stddev", s.stddev}, {"count", s.trials.size()}, {"failures", s.failures}};
}

void FootprintParams::validate() const {
    for (double v : {hours, cores, core_power_w, core_usage, memory_gb, memory_power_w_per_gb, carbon_intensity}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("footprint parameters must be finite and non-negative");
        }
    }
    if (core_usage > 1.0) {
        throw std::invalid_argument("core usage must lie in [0,1]");
    }
    if (!(pue >= 1.0) || !std::isfinite(pue)) {
        throw std::invalid_argument("PUE must be >= 1");
    }
}

nlohmann::json to_json(const FootprintParams& p) {
    return {{"t_hours", p.hours},        {"n_c", p.cores},     {"P_c", p.core_power_w},
            {"u_c", p.core_usage},       {"n_m", p.memory_gb}, {"P_m", p.memory_power_w_per_gb},
            {"PUE", p.pue},              {"CI", p.carbon_intensity}};
}

double energy_kwh(const FootprintParams& p) {
    p.validate();
    return p.hours * (p.cores * p.core_power_w * p.core_usage + p.memory_gb * p.memory_power_w_per_gb) * p.pue *
           0.001;
}

double carbon_g(double energy_kwh, double carbon_intensity) {
    if (energy_kwh < 0.0 || carbon_intensity < 0.0) {
        throw std::invalid_argument("energy and carbon intensity must be non-negative");
    }
    return energy_kwh * carbon_intensity;
}

double carbon_fused_g(const FootprintParams& p) {
    p.validate();
    return p.hours * (p.cores * p.core_power_w * p.core_usage + p.memory_gb * p.memory_power_w_per_gb) * p.pue *
           p.carbon_intensity * 0.001;
}

std::string display_carbon(double grams) {
    if (grams <= 0.005) {
        return "0.0";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", grams);
    return buf;
}

FootprintReport footprint_for(double seconds, FootprintParams params) {
    params.hours = seconds / 3600.0;
    FootprintReport r{params, energy_kwh(params), 0.0};
    r.carbon_g = carbon_g(r.energy_kwh, params.carbon_intensity);
    return r;
}

nlohmann::json to_json(const FootprintReport& r) {
    return {{"params", to_json(r.params)},
            {"energy_kwh", r.energy_kwh},
            {"co2_g", r.carbon_g},
            {"co2_display", display_carbon(r.carbon_g)}};
}

std::size_t peak_memory_bytes() {
    rusage u{};
    if (getrusage(RUSAGE_SELF, &u) != 0) {
        return 0;
    }
    return static_cast<std::size_t>(u.ru_maxrss) * 1024;
}

const std::vector<std::string> kResultColumns{"dataset", "method",    "class",           "SF",
                                              "CSF",     "NF",        "AF",              "fs_accuracy",
                                              "clf_accuracy_mean",    "clf_accuracy_std", "runtime_s",
                                              "energy_kwh",           "co2_g",           "seed"};

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        out += ch;
        if (ch == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

}  // namespace

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < kResultColumns.size(); ++i) {
        out << (i ? "," : "") << kResultColumns[i];
    }
    out << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    for (const auto& r : rows) {
        out << csv_cell(r.dataset) << ',' << csv_cell(r.method) << ',' << (r.class_id ? std::to_string(r.class_id) : "all")
            << ',';
        if (r.metrics) {
            out << r.metrics->sf << ',' << r.metrics->csf << ',' << r.metrics->nf << ',' << r.metrics->af << ','
                << num(r.metrics->fs_accuracy);
        } else {
            out << ",,,,";
        }
        out << ',' << opt(r.clf_accuracy_mean) << ',' << opt(r.clf_accuracy_std) << ',' << num(r.runtime_s) << ','
            << num(r.energy_kwh) << ',' << num(r.co2_g) << ',' << r.seed << '\n';
    }
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

void write_method_report(const std::filesystem::path& root, const std::string& dataset, const std::string& method,
                         const nlohmann::json& trials, const nlohmann::json& summary, const nlohmann::json& footprint) {
    const auto dir = root / dataset / method;
    write_json(trials, dir / "trials.json");
    write_json(summary, dir / "summary.json");
    write_json(footprint, dir / "footprint.json");
}

}  // namespace fsbench
