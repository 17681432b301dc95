#include "treebandit/features.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace treebandit {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf, ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, const std::string& what) {
    s = trim(s);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument("bad numeric value for " + what + ": '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s, const std::string& what) {
    s = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer value for " + what + ": '" + std::string(s) + "'");
    return v;
}

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
    if (features_.empty()) throw std::invalid_argument("schema needs at least one feature");
    std::set<std::string> names;
    for (const auto& f : features_) {
        if (f.name.empty()) throw std::invalid_argument("feature with empty name");
        if (!names.insert(f.name).second) throw std::invalid_argument("duplicate feature name: " + f.name);
        if (f.kind == FeatureKind::categorical) {
            if (f.levels.empty()) throw std::invalid_argument("categorical feature without levels: " + f.name);
            if (f.levels.size() > 64)
                throw std::invalid_argument("categorical feature limited to 64 levels: " + f.name);
            std::set<std::string> lv(f.levels.begin(), f.levels.end());
            if (lv.size() != f.levels.size()) throw std::invalid_argument("duplicate level in feature: " + f.name);
        } else if (!f.levels.empty()) {
            throw std::invalid_argument("continuous feature with levels: " + f.name);
        }
    }
}

int FeatureSchema::feature_index(std::string_view name) const {
    for (int i = 0; i < dimension(); ++i)
        if (features_[i].name == name) return i;
    return -1;
}

int FeatureSchema::level_index(int feature, std::string_view level) const {
    const auto& lv = features_.at(feature).levels;
    for (int i = 0; i < static_cast<int>(lv.size()); ++i)
        if (lv[i] == level) return i;
    return -1;
}

bool FeatureSchema::operator==(const FeatureSchema& o) const {
    if (features_.size() != o.features_.size()) return false;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name != o.features_[i].name) return false;
        if (features_[i].kind != o.features_[i].kind) return false;
        if (features_[i].levels != o.features_[i].levels) return false;
    }
    return true;
}

void validate_context(const FeatureSchema& schema, const ContextVector& x) {
    if (static_cast<int>(x.size()) != schema.dimension())
        throw std::invalid_argument("context has " + std::to_string(x.size()) + " values, schema expects " +
                                    std::to_string(schema.dimension()));
    for (int i = 0; i < schema.dimension(); ++i) {
        const Feature& f = schema.feature(i);
        if (!std::isfinite(x[i]))
            throw std::invalid_argument("non-finite value for feature " + f.name);
        if (f.kind == FeatureKind::categorical) {
            double r = std::nearbyint(x[i]);
            if (r != x[i] || r < 0 || r >= static_cast<double>(f.levels.size()))
                throw std::invalid_argument("invalid level index " + format_double(x[i]) + " for feature " + f.name);
        }
    }
}

namespace {
constexpr uint64_t kMaxCellKeys = 1 << 13;
}

ActionDataset::ActionDataset(int action, SchemaPtr schema) : action_(action), schema_(std::move(schema)) {
    if (!schema_ || schema_->dimension() == 0) throw std::invalid_argument("dataset needs a non-empty schema");
    cols_.resize(schema_->dimension());

    uint64_t keys = 2;  // reward bit
    cells_ok_ = true;
    for (const auto& f : schema_->features()) {
        if (f.kind != FeatureKind::categorical) {
            cells_ok_ = false;
            break;
        }
        cell_strides_.push_back(keys);
        keys *= f.levels.size();
        if (keys > kMaxCellKeys) {
            cells_ok_ = false;
            break;
        }
    }
    if (cells_ok_) cell_lookup_.assign(keys, -1);
}

void ActionDataset::append(const ContextVector& x, int reward) {
    validate_context(*schema_, x);
    if (reward != 0 && reward != 1) throw std::invalid_argument("reward must be 0 or 1");
    uint32_t row = static_cast<uint32_t>(size());
    for (int f = 0; f < schema_->dimension(); ++f) cols_[f].push_back(x[f]);
    rewards_.push_back(static_cast<uint8_t>(reward));
    successes_ += reward;

    if (cells_ok_) {
        uint64_t key = static_cast<uint64_t>(reward);
        for (int f = 0; f < schema_->dimension(); ++f)
            key += cell_strides_[f] * static_cast<uint64_t>(x[f]);
        int32_t& slot = cell_lookup_[key];
        if (slot < 0) {
            slot = static_cast<int32_t>(cells_.size());
            cells_.push_back({row, 1});
        } else {
            ++cells_[slot].count;
        }
    }
}

Observation ActionDataset::row(std::size_t i) const {
    Observation o;
    o.context.resize(cols_.size());
    for (std::size_t f = 0; f < cols_.size(); ++f) o.context[f] = cols_[f][i];
    o.reward = rewards_[i];
    return o;
}

const std::vector<DatasetCell>* ActionDataset::cells() const {
    return cells_ok_ ? &cells_ : nullptr;
}

}  // namespace treebandit
