#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "treebandit/util.hpp"

namespace treebandit {

enum class FeatureKind { continuous, categorical };

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::vector<std::string> levels;  // categorical only, non-empty
};

class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<Feature> features);

    int dimension() const { return static_cast<int>(features_.size()); }
    const Feature& feature(int i) const { return features_.at(i); }
    const std::vector<Feature>& features() const { return features_; }
    int feature_index(std::string_view name) const;           // -1 if unknown
    int level_index(int feature, std::string_view level) const;  // -1 if unknown

    bool operator==(const FeatureSchema& o) const;
    bool operator!=(const FeatureSchema& o) const { return !(*this == o); }

private:
    std::vector<Feature> features_;
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

// One value per feature: continuous features hold the raw value,
// categorical features hold the level index as a whole number.
using ContextVector = std::vector<double>;

// Throws std::invalid_argument on dimension or value mismatch.
void validate_context(const FeatureSchema& schema, const ContextVector& x);

struct Observation {
    ContextVector context;
    int reward = 0;  // 0 or 1
};

// Distinct (context, reward) cell of an all-categorical dataset.
struct DatasetCell {
    uint32_t row;    // representative row index
    uint32_t count;  // multiplicity
};

// Per-action reward history. Append-only, column-major storage.
class ActionDataset {
public:
    ActionDataset(int action, SchemaPtr schema);

    void append(const ContextVector& x, int reward);

    int action() const { return action_; }
    const SchemaPtr& schema() const { return schema_; }
    std::size_t size() const { return rewards_.size(); }
    std::size_t success_count() const { return successes_; }

    double value(std::size_t row, int feature) const { return cols_[feature][row]; }
    int reward(std::size_t row) const { return rewards_[row]; }
    Observation row(std::size_t i) const;

    // Distinct-cell summary, maintained while the schema is all-categorical
    // with a small level product; nullptr once unavailable.
    const std::vector<DatasetCell>* cells() const;

private:
    int action_;
    SchemaPtr schema_;
    std::vector<std::vector<double>> cols_;
    std::vector<uint8_t> rewards_;
    std::size_t successes_ = 0;

    bool cells_ok_ = false;
    std::vector<uint64_t> cell_strides_;
    std::vector<DatasetCell> cells_;
    std::vector<int32_t> cell_lookup_;  // cell key -> index into cells_, -1 empty
};

}  // namespace treebandit
