#pragma once

#include "netanom/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace netanom::data {

enum class ColumnKind { Numeric, Nominal, Ip, Port, Timestamp, Label, Category };

ColumnKind parse_kind(const std::string& token);
std::string kind_name(ColumnKind k);

struct SchemaColumn {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    bool keep = true;
};

// Column layout of a flow CSV. One line per column in a schema file:
//   <name> <kind> <keep|drop>
// kinds: numeric nominal ip port timestamp label category.
struct Schema {
    std::vector<SchemaColumn> columns;

    static Schema load(const std::string& path);
    static Schema parse(const std::string& text);
    void save(const std::string& path) const;
    std::string to_text() const;

    // names of all nominal-kind columns, schema order (keep and drop alike)
    std::vector<std::string> nominal_names() const;
    // index into nominal_names() for a column name, -1 if absent
    int nominal_index(const std::string& name) const;
    void validate() const;
};

// One parsed flow row. Ports are -1 when the schema has no port column;
// nominal_values covers every nominal column so row filters keep working
// even when a nominal is dropped from the feature matrix.
struct FlowRecord {
    double timestamp = 0.0;
    std::string src_ip;
    std::string dst_ip;
    std::int64_t src_port = -1;
    std::int64_t dst_port = -1;
    std::vector<std::string> nominal_values;  // aligned with Schema::nominal_names()
    std::vector<double> numeric_values;       // kept numeric columns, schema order
    int label = 0;
    std::string attack_category;
};

struct LoadIssue {
    std::size_t row = 0;  // 1-based data row number
    std::string message;
};

struct LoadResult {
    std::vector<FlowRecord> records;
    std::vector<LoadIssue> skipped;  // rows with unparseable cells, reported not silent
};

// Header must match the schema column names exactly (count and order).
// A row with the wrong field count is a hard error naming the row.
LoadResult load_flow_csv(const std::string& path, const Schema& schema);

struct CleanResult {
    std::vector<FlowRecord> kept;
    std::size_t dropped_count = 0;
};

// Drops records violating the record invariants: ports outside [0, 65535],
// non-finite or negative numeric features, labels outside {0,1}.
CleanResult clean(const std::vector<FlowRecord>& records);

// Builds the feature matrix over the schema's kept columns (schema order).
// Nominal tokens map to integers in descending-frequency order, ties broken
// lexicographically. Passing `maps` reuses stored encodings; unseen tokens
// then share the single code one past the stored range.
Dataset encode_nominal(const std::vector<FlowRecord>& records, const Schema& schema);
Dataset encode_nominal(const std::vector<FlowRecord>& records, const Schema& schema,
                       const std::map<std::string, std::vector<std::string>>& maps);

// chi2 statistic per column against the class variable: observed = per-class
// column sums, expected = class prior * total sum. Columns are min-max
// rescaled to [0,1] internally so sums behave like counts.
VecD chi2_scores(const Matrix& features, const VecI& labels);

// Discrete mutual information (nats) between each equal-frequency-binned
// column and the labels.
VecD mutual_info_scores(const Matrix& features, const VecI& labels, int bins = 20);

// Greedy scan in column order; drops a column iff |pearson r| against any
// earlier kept column exceeds the threshold. Constant columns correlate 0.
std::vector<int> correlation_filter(const Matrix& features, double threshold = 0.85);

struct SelectionReport {
    std::vector<std::string> names;      // pre-selection column names; indices refer here
    VecD chi2;
    VecD mutual_info;
    std::vector<int> chi2_top;           // top-k column indices by chi2
    std::vector<int> mi_top;             // top-k column indices by mutual info
    std::vector<int> union_columns;      // union, original column order
    std::vector<int> kept_columns;       // after the correlation filter
    std::vector<std::pair<int, int>> correlation_drops;  // (dropped, kept it collided with)
    double corr_threshold = 0.85;
    int top_k = 0;

    nlohmann::json to_json() const;
};

struct SelectionResult {
    Dataset dataset;
    SelectionReport report;
};

// union of top-k columns by chi2 and by mutual information, then the
// correlation filter
SelectionResult select_features(const Dataset& dataset, int top_k, double corr_threshold = 0.85);

// column subset in the given order, carrying names and nominal maps along
Dataset restrict_columns(const Dataset& ds, const std::vector<int>& cols);

FeatureStats fit_stats(const Matrix& features);
void apply_stats(Matrix& features, const FeatureStats& stats);
void invert_stats(Matrix& features, const FeatureStats& stats);

struct StandardizeResult {
    Dataset train;
    std::vector<Dataset> others;
    FeatureStats stats;
};

// Train columns end up mean 0 / population std 1 (constant columns pass
// through); every other dataset is transformed with the train stats.
StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others);

struct SplitResult {
    Dataset train;
    Dataset test;
};

SplitResult train_test_split(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                             bool stratified);

// Two gaussian classes with per-feature mean gap `separation` and unit
// variance, plus one class-correlated nominal column (encoded).
Dataset synth_generate(int n_normal, int n_malicious, int m, double separation,
                       std::uint64_t seed);

// Desk-scale raw flow table for exercising the full ingest pipeline:
// timestamps, ips, ports, protocol, nonnegative numeric features.
struct SynthFlows {
    Schema schema;
    std::vector<std::vector<std::string>> rows;  // header + data, ready for csv::write_file
};
SynthFlows synth_flows(int n_normal, int n_malicious, int n_numeric, double separation,
                       std::uint64_t seed);

// dataset csv: feature columns + final "label" column
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

// json sidecar: feature names, nominal maps, optional stats and selection report
nlohmann::json dataset_sidecar(const Dataset& ds, const FeatureStats* stats = nullptr,
                               const SelectionReport* report = nullptr);
void apply_sidecar(Dataset& ds, const nlohmann::json& sidecar, FeatureStats* stats = nullptr);

nlohmann::json stats_to_json(const FeatureStats& stats);
FeatureStats stats_from_json(const nlohmann::json& j);

}  // namespace netanom::data
