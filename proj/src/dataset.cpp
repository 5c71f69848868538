#include "fsbench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fsbench/diagnostics.hpp"

namespace fsbench {

Dataset::Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names,
                 std::vector<std::string> class_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)) {
    if (labels_.size() != features_.rows()) {
        throw DataError("label count " + std::to_string(labels_.size()) + " does not match row count " +
                        std::to_string(features_.rows()));
    }
    num_classes_ = labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
    for (int l : labels_) {
        if (l < 1) {
            throw DataError("class ids must be >= 1, got " + std::to_string(l));
        }
        ++counts[static_cast<std::size_t>(l - 1)];
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) {
            throw DataError("class " + std::to_string(k + 1) + " has no samples");
        }
    }
    if (feature_names_.empty()) {
        for (std::size_t f = 0; f < features_.cols(); ++f) {
            feature_names_.push_back("f" + std::to_string(f + 1));
        }
    } else if (feature_names_.size() != features_.cols()) {
        throw DataError("feature name count does not match column count");
    }
    if (class_names_.empty()) {
        for (int k = 1; k <= num_classes_; ++k) {
            class_names_.push_back(std::to_string(k));
        }
    } else if (class_names_.size() != static_cast<std::size_t>(num_classes_)) {
        throw DataError("class name count does not match class count");
    }
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
    for (int l : labels_) {
        ++counts[static_cast<std::size_t>(l - 1)];
    }
    return counts;
}

std::vector<std::size_t> Dataset::rows_of_class(int class_id) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == class_id) {
            rows.push_back(i);
        }
    }
    return rows;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Matrix m(rows.size(), features());
    std::vector<int> present(static_cast<std::size_t>(num_classes_) + 1, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = row(rows[r]);
        std::copy(src.begin(), src.end(), m.row(r).begin());
        present[static_cast<std::size_t>(labels_[rows[r]])] = 1;
    }
    std::vector<int> remap(present.size(), 0);
    std::vector<std::string> names;
    int next = 0;
    for (std::size_t k = 1; k < present.size(); ++k) {
        if (present[k]) {
            remap[k] = ++next;
            names.push_back(class_names_[k - 1]);
        }
    }
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (auto r : rows) {
        labels.push_back(remap[static_cast<std::size_t>(labels_[r])]);
    }
    Dataset out(std::move(m), std::move(labels), feature_names_, std::move(names));
    out.normalized_ = normalized_;
    out.source_ranges_ = source_ranges_;
    return out;
}

Dataset Dataset::project(std::span<const std::size_t> columns) const {
    Matrix m(samples(), columns.size());
    std::vector<std::string> names;
    std::vector<ColumnRange> ranges;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= features()) {
            throw DataError("projected column " + std::to_string(columns[c] + 1) + " out of range");
        }
        names.push_back(feature_names_[columns[c]]);
        if (!source_ranges_.empty()) {
            ranges.push_back(source_ranges_[columns[c]]);
        }
    }
    for (std::size_t i = 0; i < samples(); ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            m(i, c) = features_(i, columns[c]);
        }
    }
    Dataset out(std::move(m), labels_, std::move(names), class_names_);
    out.normalized_ = normalized_;
    out.source_ranges_ = std::move(ranges);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    for (auto& c : cells) {
        auto b = c.find_first_not_of(" \t");
        auto e = c.find_last_not_of(" \t");
        c = (b == std::string::npos) ? std::string{} : c.substr(b, e - b + 1);
    }
    return cells;
}

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<long long> parse_integer(const std::string& s) {
    long long v = 0;
    const char* first = s.data();
    if (!s.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
        throw DataError(path.string() + ": empty file");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line.erase(0, 3);  // UTF-8 BOM
    }
    const auto header = split_csv_line(line);
    std::size_t label_idx = header.size() - 1;
    if (label_column != "last") {
        auto it = std::find(header.begin(), header.end(), label_column);
        if (it == header.end()) {
            throw DataError(path.string() + ": no column named '" + label_column + "'");
        }
        label_idx = static_cast<std::size_t>(it - header.begin());
    }
    if (header.size() < 2) {
        throw DataError(path.string() + ": need at least one feature column and a label column");
    }

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_idx) {
            names.push_back(header[c]);
        }
    }

    std::vector<double> values;
    std::vector<std::string> raw_labels;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError(path.string() + ": line " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " columns, header has " +
                            std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                raw_labels.push_back(cells[c]);
                continue;
            }
            auto v = parse_real(cells[c]);
            if (!v) {
                throw DataError(path.string() + ": line " + std::to_string(row_no) + ", column '" + header[c] +
                                "': cannot parse '" + cells[c] + "' as a finite number");
            }
            values.push_back(*v);
        }
    }
    if (raw_labels.empty()) {
        throw DataError(path.string() + ": no data rows");
    }

    // Label mapping: all-integer labels are ranked numerically, otherwise
    // first-appearance order.
    std::vector<int> labels(raw_labels.size());
    std::vector<std::string> class_names;
    bool all_int = std::all_of(raw_labels.begin(), raw_labels.end(),
                               [](const std::string& s) { return parse_integer(s).has_value(); });
    if (all_int) {
        std::map<long long, int> rank;
        for (const auto& s : raw_labels) {
            rank.emplace(*parse_integer(s), 0);
        }
        int k = 0;
        for (auto& [value, id] : rank) {
            id = ++k;
            class_names.push_back(std::to_string(value));
        }
        for (std::size_t i = 0; i < raw_labels.size(); ++i) {
            labels[i] = rank.at(*parse_integer(raw_labels[i]));
        }
    } else {
        std::unordered_map<std::string, int> ids;
        for (std::size_t i = 0; i < raw_labels.size(); ++i) {
            auto [it, inserted] = ids.emplace(raw_labels[i], static_cast<int>(ids.size()) + 1);
            if (inserted) {
                class_names.push_back(raw_labels[i]);
            }
            labels[i] = it->second;
        }
    }

    Matrix m(raw_labels.size(), names.size());
    std::copy(values.begin(), values.end(), m.row(0).begin());
    Dataset d(std::move(m), std::move(labels), std::move(names), std::move(class_names));
    if (d.num_classes() == 1) {
        warn(path.string() + ": only one class present; class-level feature selection is degenerate");
    }
    return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& path, const std::string& label_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& name : d.feature_names()) {
        out << name << ',';
    }
    out << label_name << '\n';
    char buf[64];
    for (std::size_t i = 0; i < d.samples(); ++i) {
        for (double v : d.row(i)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << d.class_names()[static_cast<std::size_t>(d.label(i) - 1)] << '\n';
    }
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

Dataset normalize_min_max(const Dataset& d) {
    std::vector<ColumnRange> ranges(d.features());
    for (std::size_t f = 0; f < d.features(); ++f) {
        double lo = d.samples() ? d.at(0, f) : 0.0;
        double hi = lo;
        for (std::size_t i = 1; i < d.samples(); ++i) {
            lo = std::min(lo, d.at(i, f));
            hi = std::max(hi, d.at(i, f));
        }
        ranges[f] = {lo, hi};
    }
    Dataset out = normalize_with(d, ranges);
    return out;
}

Dataset normalize_with(const Dataset& d, std::span<const ColumnRange> ranges) {
    if (ranges.size() != d.features()) {
        throw DataError("range count does not match feature count");
    }
    Matrix m(d.samples(), d.features());
    for (std::size_t i = 0; i < d.samples(); ++i) {
        for (std::size_t f = 0; f < d.features(); ++f) {
            const double span = ranges[f].max - ranges[f].min;
            double v = span > 0.0 ? (d.at(i, f) - ranges[f].min) / span : 0.0;
            m(i, f) = std::clamp(v, 0.0, 1.0);
        }
    }
    Dataset out(std::move(m), d.labels(), d.feature_names(), d.class_names());
    out.normalized_ = true;
    out.source_ranges_.assign(ranges.begin(), ranges.end());
    return out;
}

std::vector<double> class_mean(const Dataset& d, int class_id, std::optional<std::span<const std::size_t>> rows) {
    std::vector<double> mean(d.features(), 0.0);
    std::size_t n = 0;
    auto accumulate = [&](std::size_t i) {
        auto r = d.row(i);
        for (std::size_t f = 0; f < mean.size(); ++f) {
            mean[f] += r[f];
        }
        ++n;
    };
    if (rows) {
        for (auto i : *rows) {
            if (i >= d.samples() || d.label(i) != class_id) {
                throw DataError("row " + std::to_string(i) + " does not belong to class " + std::to_string(class_id));
            }
            accumulate(i);
        }
    } else {
        for (std::size_t i = 0; i < d.samples(); ++i) {
            if (d.label(i) == class_id) {
                accumulate(i);
            }
        }
    }
    if (n == 0) {
        throw DataError("class_mean: empty selection for class " + std::to_string(class_id));
    }
    for (auto& v : mean) {
        v /= static_cast<double>(n);
    }
    return mean;
}

FeatureSet RelevanceTruth::noise_features(std::size_t feature_count) const {
    FeatureSet noise;
    for (std::size_t f = 0; f < feature_count; ++f) {
        bool used = std::any_of(per_class.begin(), per_class.end(),
                                [f](const auto& kv) { return kv.second.count(f) > 0; });
        if (!used) {
            noise.insert(f);
        }
    }
    return noise;
}

void RelevanceTruth::validate(const Dataset& d) const {
    for (int k = 1; k <= d.num_classes(); ++k) {
        if (!per_class.count(k)) {
            throw DataError("truth has no entry for class " + std::to_string(k));
        }
    }
    for (const auto& [k, set] : per_class) {
        for (auto f : set) {
            if (f >= d.features()) {
                throw DataError("truth feature " + std::to_string(f + 1) + " of class " + std::to_string(k) +
                                " exceeds feature count " + std::to_string(d.features()));
            }
        }
    }
}

RelevanceTruth load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (!j.contains("classes") || !j["classes"].is_object()) {
        throw DataError(path.string() + ": expected an object with a \"classes\" map");
    }
    RelevanceTruth truth;
    for (const auto& [key, list] : j["classes"].items()) {
        int k = std::stoi(key);
        FeatureSet set;
        for (const auto& v : list) {
            const auto idx = v.get<long long>();
            if (idx < 1) {
                throw DataError(path.string() + ": feature indices are 1-based");
            }
            set.insert(static_cast<std::size_t>(idx - 1));
        }
        truth.per_class[k] = std::move(set);
    }
    return truth;
}

void save_truth(const RelevanceTruth& truth, const std::filesystem::path& path) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [k, set] : truth.per_class) {
        auto arr = nlohmann::json::array();
        for (auto f : set) {
            arr.push_back(f + 1);
        }
        classes[std::to_string(k)] = arr;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << nlohmann::json{{"classes", classes}}.dump(2) << '\n';
}

}  // namespace fsbench
