#include "treebandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace treebandit {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> to_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::vector<std::string> whitespace_tokens(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

Feature parse_feature_line(const std::vector<std::string>& toks) {
    if (toks.size() < 3) throw std::invalid_argument("feature line needs: feature <name> <kind> [levels...]");
    Feature f;
    f.name = toks[1];
    if (toks[2] == "continuous") {
        if (toks.size() != 3) throw std::invalid_argument("continuous feature takes no levels: " + f.name);
        f.kind = FeatureKind::continuous;
    } else if (toks[2] == "categorical") {
        f.kind = FeatureKind::categorical;
        f.levels.assign(toks.begin() + 3, toks.end());
    } else {
        throw std::invalid_argument("unknown feature kind: " + toks[2]);
    }
    return f;
}

constexpr const char* kSportsTruthText = R"(feature age_over_40 categorical 0 1
feature male categorical 0 1
feature high_income categorical 0 1
feature urban categorical 0 1
actions golf basketball tennis soccer

action golf
  split age_over_40 in 1
    split high_income in 1
      leaf p=0.9
      leaf p=0.55
    leaf p=0.1

action basketball
  split age_over_40 in 1
    leaf p=0.15
    split urban in 1
      leaf p=0.9
      leaf p=0.5

action tennis
  split male in 1
    split high_income in 1
      leaf p=0.65
      leaf p=0.35
    split age_over_40 in 1
      leaf p=0.4
      leaf p=0.25

action soccer
  split urban in 1
    split male in 1
      leaf p=0.75
      leaf p=0.4
    leaf p=0.05
)";

}  // namespace

TruthSpec parse_truth(const std::string& text) {
    std::vector<std::string> lines = to_lines(text);

    std::vector<Feature> features;
    std::vector<std::string> action_names;
    std::size_t i = 0;
    for (; i < lines.size(); ++i) {
        std::string t(trim(lines[i]));
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> toks = whitespace_tokens(t);
        if (toks[0] == "feature") {
            features.push_back(parse_feature_line(toks));
        } else if (toks[0] == "actions") {
            action_names.assign(toks.begin() + 1, toks.end());
            ++i;
            break;
        } else {
            throw std::invalid_argument("expected feature/actions declaration, got: " + t);
        }
    }
    if (action_names.size() < 2) throw std::invalid_argument("truth needs at least two actions");
    for (std::size_t a = 0; a < action_names.size(); ++a)
        for (std::size_t b = a + 1; b < action_names.size(); ++b)
            if (action_names[a] == action_names[b])
                throw std::invalid_argument("duplicate action name: " + action_names[a]);

    auto schema = std::make_shared<FeatureSchema>(std::move(features));

    std::unordered_map<std::string, DecisionTree> trees;
    std::string current;
    std::vector<std::string> block;
    auto flush = [&]() {
        if (current.empty()) return;
        if (trees.count(current)) throw std::invalid_argument("duplicate tree for action: " + current);
        trees.emplace(current, parse_tree(*schema, block, schema));
        block.clear();
    };
    for (; i < lines.size(); ++i) {
        const std::string& raw = lines[i];
        std::string t(trim(raw));
        if (t.empty() || t[0] == '#') continue;
        if (raw[0] != ' ' && raw.rfind("action ", 0) == 0) {
            flush();
            current = trim(raw.substr(7));
            if (std::find(action_names.begin(), action_names.end(), current) == action_names.end())
                throw std::invalid_argument("tree for undeclared action: " + current);
        } else {
            if (current.empty()) throw std::invalid_argument("tree line outside an action block: " + t);
            block.push_back(raw);
        }
    }
    flush();

    TruthSpec spec;
    spec.schema = schema;
    spec.action_names = action_names;
    for (const std::string& name : action_names) {
        auto it = trees.find(name);
        if (it == trees.end()) throw std::invalid_argument("missing tree for action: " + name);
        spec.trees.push_back(std::move(it->second));
    }
    return spec;
}

TruthSpec load_truth(const std::string& path) { return parse_truth(read_file(path)); }

TruthSpec default_sports_truth() { return parse_truth(kSportsTruthText); }

namespace {

class SimulatedEnv final : public BanditEnvironment {
  public:
    explicit SimulatedEnv(TruthSpec truth) : truth_(std::move(truth)) {
        if (!truth_.schema) throw std::invalid_argument("simulated environment needs a schema");
        if (truth_.trees.size() < 2) throw std::invalid_argument("simulated environment needs at least two actions");
    }

    SchemaPtr schema() const override { return truth_.schema; }
    int num_actions() const override { return static_cast<int>(truth_.trees.size()); }
    const std::vector<std::string>& action_names() const override { return truth_.action_names; }

    ContextVector next_context(Rng& rng) override {
        const FeatureSchema& s = *truth_.schema;
        ContextVector x(s.dimension());
        for (int i = 0; i < s.dimension(); ++i) {
            const Feature& f = s.feature(i);
            if (f.kind == FeatureKind::categorical) {
                std::uniform_int_distribution<int> d(0, static_cast<int>(f.levels.size()) - 1);
                x[i] = d(rng);
            } else {
                std::uniform_real_distribution<double> d(0.0, 1.0);
                x[i] = d(rng);
            }
        }
        return x;
    }

    int realize_reward(const ContextVector& x, int action, Rng& rng) override {
        check_action(action);
        std::bernoulli_distribution d(truth_.trees[action].predict(x));
        return d(rng) ? 1 : 0;
    }

    std::vector<double> oracle_probs(const ContextVector& x) const override {
        std::vector<double> out;
        out.reserve(truth_.trees.size());
        for (const auto& t : truth_.trees) out.push_back(t.predict(x));
        return out;
    }

  private:
    void check_action(int a) const {
        if (a < 0 || a >= num_actions()) throw std::invalid_argument("action index out of range");
    }

    TruthSpec truth_;
};

class ClassificationEnv final : public BanditEnvironment {
  public:
    ClassificationEnv(std::shared_ptr<const ClassificationTable> table, std::uint64_t shuffle_seed)
        : table_(std::move(table)) {
        if (!table_ || table_->rows.empty()) throw std::invalid_argument("classification environment needs rows");
        if (table_->num_classes() < 2)
            throw std::invalid_argument("classification environment needs at least two classes");
        order_.resize(table_->rows.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        Rng rng(shuffle_seed);
        std::shuffle(order_.begin(), order_.end(), rng);
    }

    SchemaPtr schema() const override { return table_->schema; }
    int num_actions() const override { return table_->num_classes(); }
    const std::vector<std::string>& action_names() const override { return table_->class_names; }
    const std::vector<ContextVector>* encoding_rows() const override { return &table_->rows; }

    ContextVector next_context(Rng&) override {
        if (cursor_ >= order_.size())
            throw std::runtime_error("horizon exceeds dataset (" + std::to_string(order_.size()) + " rows)");
        current_ = static_cast<std::ptrdiff_t>(order_[cursor_++]);
        return table_->rows[current_];
    }

    int realize_reward(const ContextVector&, int action, Rng&) override {
        if (current_ < 0) throw std::runtime_error("no context drawn yet");
        if (action < 0 || action >= num_actions()) throw std::invalid_argument("action index out of range");
        return table_->labels[current_] == action ? 1 : 0;
    }

    std::vector<double> oracle_probs(const ContextVector&) const override {
        if (current_ < 0) throw std::runtime_error("no context drawn yet");
        std::vector<double> out(table_->num_classes(), 0.0);
        out[table_->labels[current_]] = 1.0;
        return out;
    }

  private:
    std::shared_ptr<const ClassificationTable> table_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::ptrdiff_t current_ = -1;
};

}  // namespace

std::unique_ptr<BanditEnvironment> make_simulated_env(TruthSpec truth) {
    return std::make_unique<SimulatedEnv>(std::move(truth));
}

std::unique_ptr<BanditEnvironment> make_classification_env(std::shared_ptr<const ClassificationTable> table,
                                                           std::uint64_t shuffle_seed) {
    return std::make_unique<ClassificationEnv>(std::move(table), shuffle_seed);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.emplace_back(trim(cur));
    return cells;
}

}  // namespace

ClassificationTable ingest_csv(const std::string& csv_path, const std::string& schema_path,
                               double rare_class_cutoff) {
    if (rare_class_cutoff < 0.0 || rare_class_cutoff >= 1.0)
        throw std::invalid_argument("rare_class_cutoff must lie in [0,1)");

    std::vector<Feature> features;
    std::string label_col;
    for (const std::string& raw : to_lines(read_file(schema_path))) {
        std::string t(trim(raw));
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> toks = whitespace_tokens(t);
        if (toks[0] == "feature") {
            features.push_back(parse_feature_line(toks));
        } else if (toks[0] == "label") {
            if (toks.size() != 2) throw std::invalid_argument("label line needs: label <column>");
            if (!label_col.empty()) throw std::invalid_argument("schema declares more than one label column");
            label_col = toks[1];
        } else {
            throw std::invalid_argument("unknown schema declaration: " + toks[0]);
        }
    }
    if (label_col.empty()) throw std::invalid_argument("schema declares no label column");
    auto schema = std::make_shared<FeatureSchema>(std::move(features));

    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open file: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv has no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);

    auto column_of = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::invalid_argument("column not found in csv header: " + name);
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> feature_cols;
    for (int f = 0; f < schema->dimension(); ++f) feature_cols.push_back(column_of(schema->feature(f).name));
    std::size_t label_idx = column_of(label_col);

    std::vector<ContextVector> rows;
    std::vector<int> raw_labels;
    std::vector<std::string> raw_names;
    std::unordered_map<std::string, int> raw_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " cells, got " +
                                        std::to_string(cells.size()));
        ContextVector x(schema->dimension());
        for (int f = 0; f < schema->dimension(); ++f) {
            const std::string& cell = cells[feature_cols[f]];
            const Feature& feat = schema->feature(f);
            if (cell.empty() || cell == "?")
                throw std::invalid_argument("line " + std::to_string(line_no) + ": missing value for " + feat.name);
            if (feat.kind == FeatureKind::continuous) {
                try {
                    x[f] = parse_double(cell, feat.name);
                } catch (const std::exception& e) {
                    throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
                }
            } else {
                int lvl = schema->level_index(f, cell);
                if (lvl < 0)
                    throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown level '" + cell +
                                                "' for feature " + feat.name);
                x[f] = static_cast<double>(lvl);
            }
        }
        const std::string& lab = cells[label_idx];
        if (lab.empty() || lab == "?")
            throw std::invalid_argument("line " + std::to_string(line_no) + ": missing value for " + label_col);
        auto [it, fresh] = raw_ids.try_emplace(lab, static_cast<int>(raw_names.size()));
        if (fresh) raw_names.push_back(lab);
        rows.push_back(std::move(x));
        raw_labels.push_back(it->second);
    }
    if (rows.empty()) throw std::invalid_argument("csv has no data rows");

    std::vector<int64_t> raw_counts(raw_names.size(), 0);
    for (int id : raw_labels) ++raw_counts[id];
    double threshold = rare_class_cutoff * static_cast<double>(rows.size());

    ClassificationTable out;
    out.schema = schema;
    std::vector<int> remap(raw_names.size(), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int id = raw_labels[i];
        if (static_cast<double>(raw_counts[id]) < threshold) continue;
        if (remap[id] < 0) {
            remap[id] = static_cast<int>(out.class_names.size());
            out.class_names.push_back(raw_names[id]);
            out.class_counts.push_back(raw_counts[id]);
        }
        out.rows.push_back(std::move(rows[i]));
        out.labels.push_back(remap[id]);
    }
    if (out.num_classes() < 2) throw std::invalid_argument("need at least two classes after ingestion");
    return out;
}

LinearEncoding LinearEncoding::fit(const FeatureSchema& schema, const std::vector<ContextVector>* rows) {
    LinearEncoding enc;
    enc.schema_dim_ = schema.dimension();
    int offset = 0;
    for (int f = 0; f < schema.dimension(); ++f) {
        const Feature& feat = schema.feature(f);
        Slot slot;
        slot.feature = f;
        slot.offset = offset;
        if (feat.kind == FeatureKind::categorical) {
            slot.categorical = true;
            slot.levels = static_cast<int>(feat.levels.size());
            offset += slot.levels;
            enc.slots_.push_back(slot);
            continue;
        }
        if (rows && !rows->empty()) {
            double n = static_cast<double>(rows->size());
            double mean = 0.0;
            for (const auto& r : *rows) mean += r[f];
            mean /= n;
            double var = 0.0;
            for (const auto& r : *rows) {
                double d = r[f] - mean;
                var += d * d;
            }
            var /= n;
            double sd = std::sqrt(var);
            if (!(sd > 0.0) || !std::isfinite(sd)) {
                enc.dropped_.push_back(feat.name);
                continue;
            }
            slot.mean = mean;
            slot.scale = sd;
        }
        offset += 1;
        enc.slots_.push_back(slot);
    }
    enc.dim_ = offset;
    return enc;
}

std::vector<double> LinearEncoding::encode(const ContextVector& x) const {
    if (static_cast<int>(x.size()) != schema_dim_)
        throw std::invalid_argument("context has " + std::to_string(x.size()) + " values, encoder expects " +
                                    std::to_string(schema_dim_));
    std::vector<double> out(dim_, 0.0);
    for (const Slot& s : slots_) {
        double v = x[s.feature];
        if (s.categorical) {
            auto idx = static_cast<std::int64_t>(std::llround(v));
            if (idx < 0 || idx >= s.levels) throw std::invalid_argument("categorical value out of range");
            out[s.offset + idx] = 1.0;
        } else {
            out[s.offset] = (v - s.mean) / s.scale;
        }
    }
    return out;
}

}  // namespace treebandit
