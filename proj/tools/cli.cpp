#include "cli.hpp"

#include "netanom/adversarial.hpp"
#include "netanom/baselines.hpp"
#include "netanom/classifiers.hpp"
#include "netanom/csv.hpp"
#include "netanom/dataset.hpp"
#include "netanom/ensemble.hpp"
#include "netanom/metrics.hpp"
#include "netanom/midas.hpp"
#include "netanom/rng.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace netanom::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// wrong invocation or bad configuration; exits with code 2
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// seed-stream tags, one per independent consumer of the top-level seed
constexpr std::uint64_t kSplitStream = 0x73706c6974;   // "split"
constexpr std::uint64_t kGridStream = 0x67726964;      // "grid"
constexpr std::uint64_t kOofStream = 0x6f6f66;         // "oof"
constexpr std::uint64_t kLevel2Stream = 0x6c3200;      // "l2" + variant index
constexpr std::uint64_t kIforestStream = 0x69666f72;   // "ifor"
constexpr std::uint64_t kCmsStream = 0x636d73;         // "cms"

double seconds_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

// ------------------------------------------------------------- config file

// every key the config file may carry, per section; unknown keys are errors
const std::map<std::string, std::set<std::string>>& key_registry() {
    static const std::map<std::string, std::set<std::string>> reg = [] {
        const std::set<std::string> common = {"seed", "threads", "out-dir"};
        std::map<std::string, std::set<std::string>> r;
        r["common"] = common;
        auto add = [&](const std::string& section, std::set<std::string> keys) {
            keys.insert(common.begin(), common.end());
            r[section] = std::move(keys);
        };
        add("synth", {"mode", "normal", "malicious", "features", "separation", "ticks", "rate",
                      "nodes", "bursts", "burst-size"});
        add("preprocess", {"input", "schema", "test-fraction", "top-k", "corr-threshold"});
        add("gen-adv", {"train", "epsilon", "fraction", "features"});
        add("train-ensemble", {"t1", "t2", "t3", "test", "level2", "folds", "grid", "oof"});
        add("midas",
            {"edges", "flows", "schema", "tick", "depth", "width", "filter", "sort", "labels"});
        add("baselines", {"input", "trees", "subsample", "k", "contamination"});
        return r;
    }();
    return reg;
}

// Line-oriented `key = value` with [section] headers; # starts a comment
// line. Keys before any header land in [common].
std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config file not found: " + path);
    std::map<std::string, std::string> values;
    std::string line;
    std::string section = "common";
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw UsageError(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail("unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!key_registry().count(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) fail("empty key");
        if (!key_registry().at(section).count(key))
            fail("unknown key '" + key + "' in section [" + section + "]");
        const std::string full = section + "." + key;
        if (values.count(full)) fail("duplicate key '" + full + "'");
        values[full] = value;
    }
    return values;
}

// Resolves each option as flag > <sub>.key > common.key > default, records
// the canonical value, and snapshots everything that was read.
class Opts {
public:
    Opts(std::string sub, std::map<std::string, std::string> config,
         std::map<std::string, std::string> cli_values)
        : sub_(std::move(sub)), config_(std::move(config)), cli_(std::move(cli_values)) {}

    bool provided(const std::string& key) const { return lookup(key).has_value(); }

    std::string get_str(const std::string& key, const std::string& def) {
        const std::string v = lookup(key).value_or(def);
        record(key, v);
        return v;
    }

    std::string require_str(const std::string& key) {
        const auto v = lookup(key);
        if (!v)
            throw UsageError("missing required option --" + key + " (or " + sub_ + "." + key +
                             " in the config file)");
        record(key, *v);
        return *v;
    }

    double get_double(const std::string& key, double def) {
        const auto v = lookup(key);
        double out = def;
        if (v && !parse_double(*v, out))
            throw UsageError("option --" + key + ": expected a number, got '" + *v + "'");
        record(key, format_double(out));
        return out;
    }

    double require_double(const std::string& key) {
        const std::string v = require_str(key);
        double out = 0.0;
        if (!parse_double(v, out))
            throw UsageError("option --" + key + ": expected a number, got '" + v + "'");
        record(key, format_double(out));
        return out;
    }

    std::int64_t get_int(const std::string& key, std::int64_t def) {
        const auto v = lookup(key);
        std::int64_t out = def;
        if (v && !parse_int64(*v, out))
            throw UsageError("option --" + key + ": expected an integer, got '" + *v + "'");
        record(key, std::to_string(out));
        return out;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t def) {
        const auto v = lookup(key);
        if (!v) {
            record(key, std::to_string(def));
            return def;
        }
        std::int64_t out = 0;
        if (!parse_int64(*v, out) || out < 0)
            throw UsageError("option --" + key + ": expected a nonnegative integer, got '" + *v +
                             "'");
        record(key, std::to_string(out));
        return static_cast<std::uint64_t>(out);
    }

    bool get_flag(const std::string& key) {
        const auto v = lookup(key);
        bool out = false;
        if (v) {
            const std::string s = lower(trim(*v));
            if (s == "true" || s == "1" || s == "yes") out = true;
            else if (s == "false" || s == "0" || s == "no") out = false;
            else throw UsageError("option --" + key + ": expected a boolean, got '" + *v + "'");
        }
        record(key, out ? "true" : "false");
        return out;
    }

    // canonical value shown in the snapshot; callers may overwrite after
    // resolving aliases or names to indices
    void record(const std::string& key, const std::string& canonical) {
        resolved_[sub_ + "." + key] = canonical;
    }

    void resolve_common() {
        seed_ = get_u64("seed", 1);
        threads_ = static_cast<int>(get_int("threads", 1));
        if (threads_ < 1) throw UsageError("option --threads: must be >= 1");
        out_dir_ = get_str("out-dir", "out");
    }

    std::uint64_t seed() const { return seed_; }
    int threads() const { return threads_; }
    const fs::path& out_dir() const { return out_dir_; }

    // Writes the sorted canonical snapshot next to the outputs and returns
    // its fingerprint; reports embed the hash so runs can be matched to the
    // exact configuration that produced them.
    const std::string& finalize() {
        std::string text;
        for (const auto& [k, v] : resolved_) text += k + " = " + v + "\n";
        hash_ = fnv1a_hex(text);
        const fs::path path = out_dir_ / "resolved_config.txt";
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f << text;
        return hash_;
    }

    const std::string& config_hash() const { return hash_; }

private:
    std::optional<std::string> lookup(const std::string& key) const {
        if (auto it = cli_.find(key); it != cli_.end()) return it->second;
        if (auto it = config_.find(sub_ + "." + key); it != config_.end()) return it->second;
        if (auto it = config_.find("common." + key); it != config_.end()) return it->second;
        return std::nullopt;
    }

    std::string sub_;
    std::map<std::string, std::string> config_;
    std::map<std::string, std::string> cli_;
    std::map<std::string, std::string> resolved_;
    std::uint64_t seed_ = 1;
    int threads_ = 1;
    fs::path out_dir_ = "out";
    std::string hash_;
};

// ------------------------------------------------------------- small helpers

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

void require_file(const std::string& path, const std::string& flag) {
    if (path.empty() || !fs::exists(path))
        throw UsageError("--" + flag + ": file not found: " + path);
}

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

clf::Kind parse_kind_arg(const std::string& name) {
    std::string s = lower(trim(name));
    if (s == "naive-bayes" || s == "nb") s = "gaussian-nb";
    if (s == "lr") s = "logistic-regression";
    if (s == "dt") s = "decision-tree";
    try {
        return clf::parse_kind(s);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

// comma-separated column indices or column names
std::vector<int> parse_feature_list(const std::string& text,
                                    const std::vector<std::string>& names) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        std::int64_t idx = -1;
        if (parse_int64(token, idx)) {
            out.push_back(static_cast<int>(idx));
            continue;
        }
        const auto it = std::find(names.begin(), names.end(), token);
        if (it == names.end()) throw UsageError("--features: unknown feature '" + token + "'");
        out.push_back(static_cast<int>(it - names.begin()));
    }
    if (out.empty()) throw UsageError("--features: empty list");
    return out;
}

VecI predict_from_scores(const VecD& scores) {
    VecI preds(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i) preds[i] = scores[i] > 0.5 ? 1 : 0;
    return preds;
}

bool has_both_classes(const VecI& y) {
    return y.size() > 0 && y.minCoeff() == 0 && y.maxCoeff() == 1;
}

metrics::MetricsReport make_report(const std::string& model, const std::string& training_set,
                                   std::uint64_t seed, const VecI& y, const VecI& preds,
                                   const VecD& scores, double train_seconds) {
    metrics::MetricsReport r;
    r.model = model;
    r.training_set = training_set;
    r.seed = seed;
    r.per_class = metrics::f1_per_class(y, preds, &r.confusion);
    r.auc = has_both_classes(y) ? metrics::auc(y, scores) : 0.0;
    r.train_seconds = train_seconds;
    r.hardware = hardware_descriptor();
    r.n_test = y.size();
    return r;
}

VecI load_label_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].size() != 1 || lower(trim(rows[0][0])) != "label")
        throw UsageError("--labels: expected a single-column csv with header 'label': " + path);
    VecI y(static_cast<Eigen::Index>(rows.size() - 1));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::int64_t v = -1;
        if (rows[i].size() != 1 || !parse_int64(trim(rows[i][0]), v) || (v != 0 && v != 1))
            throw UsageError("--labels: row " + std::to_string(i) + ": expected 0 or 1");
        y[static_cast<Eigen::Index>(i - 1)] = static_cast<int>(v);
    }
    return y;
}

// ------------------------------------------------------------- subcommands

int cmd_synth(Opts& o) {
    const std::string mode = lower(o.get_str("mode", "dataset"));
    o.record("mode", mode);
    if (mode != "dataset" && mode != "flows" && mode != "edges")
        throw UsageError("--mode: expected dataset, flows, or edges, got '" + mode + "'");

    json summary{{"command", "synth"}, {"mode", mode}, {"seed", o.seed()}};
    if (mode == "dataset" || mode == "flows") {
        const int normal = static_cast<int>(o.get_int("normal", 700));
        const int malicious = static_cast<int>(o.get_int("malicious", 300));
        const int m = static_cast<int>(o.get_int("features", 10));
        const double separation = o.get_double("separation", 1.5);
        if (normal < 1 || malicious < 1)
            throw UsageError("--normal/--malicious: must be >= 1");
        if (m < 1) throw UsageError("--features: must be >= 1");
        summary["config_hash"] = o.finalize();
        if (mode == "dataset") {
            const Dataset ds = data::synth_generate(normal, malicious, m, separation, o.seed());
            data::save_dataset_csv(ds, (o.out_dir() / "dataset.csv").string());
            write_json_file(o.out_dir() / "dataset.json", data::dataset_sidecar(ds));
            summary["rows"] = ds.n_rows();
            summary["cols"] = ds.n_cols();
            summary["outputs"] = {"dataset.csv", "dataset.json"};
        } else {
            const data::SynthFlows sf =
                data::synth_flows(normal, malicious, m, separation, o.seed());
            csv::write_file((o.out_dir() / "flows.csv").string(), sf.rows);
            sf.schema.save((o.out_dir() / "flows.schema").string());
            summary["rows"] = sf.rows.size() - 1;
            summary["outputs"] = {"flows.csv", "flows.schema"};
        }
    } else {
        midas::EdgeStreamConfig cfg;
        cfg.ticks = o.get_int("ticks", cfg.ticks);
        cfg.background_rate = o.get_double("rate", cfg.background_rate);
        cfg.n_nodes = static_cast<int>(o.get_int("nodes", cfg.n_nodes));
        cfg.n_bursts = static_cast<int>(o.get_int("bursts", cfg.n_bursts));
        cfg.burst_size = o.get_int("burst-size", cfg.burst_size);
        cfg.seed = o.seed();
        if (cfg.ticks < 2) throw UsageError("--ticks: must be >= 2");
        if (!(cfg.background_rate > 0.0)) throw UsageError("--rate: must be > 0");
        if (cfg.n_nodes < 2) throw UsageError("--nodes: must be >= 2");
        if (cfg.n_bursts < 0) throw UsageError("--bursts: must be >= 0");
        if (cfg.burst_size < 1) throw UsageError("--burst-size: must be >= 1");
        summary["config_hash"] = o.finalize();
        const midas::SynthStream stream = midas::synth_edge_stream(cfg);
        midas::save_edge_csv(stream.events, (o.out_dir() / "edges.csv").string());
        std::vector<std::vector<std::string>> rows;
        rows.reserve(stream.events.size() + 1);
        rows.push_back({"label"});
        for (Eigen::Index i = 0; i < stream.labels.size(); ++i)
            rows.push_back({std::to_string(stream.labels[i])});
        csv::write_file((o.out_dir() / "edge_labels.csv").string(), rows);
        summary["events"] = stream.events.size();
        summary["burst_events"] = stream.labels.sum();
        summary["outputs"] = {"edges.csv", "edge_labels.csv"};
    }
    write_json_file(o.out_dir() / "summary.json", summary);
    return 0;
}

int cmd_preprocess(Opts& o) {
    const std::string input = o.require_str("input");
    const std::string schema_path = o.require_str("schema");
    require_file(input, "input");
    require_file(schema_path, "schema");
    const double test_fraction = o.get_double("test-fraction", 0.3);
    const int top_k = static_cast<int>(o.get_int("top-k", 15));
    const double corr = o.get_double("corr-threshold", 0.85);
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw UsageError("--test-fraction: must be in (0, 1)");
    if (top_k < 1) throw UsageError("--top-k: must be >= 1");
    if (!(corr > 0.0 && corr <= 1.0)) throw UsageError("--corr-threshold: must be in (0, 1]");
    const std::string& hash = o.finalize();

    const data::Schema schema = data::Schema::load(schema_path);
    const data::LoadResult loaded = data::load_flow_csv(input, schema);
    const data::CleanResult cleaned = data::clean(loaded.records);
    const Dataset ds = data::encode_nominal(cleaned.kept, schema);
    const data::SplitResult split =
        data::train_test_split(ds, test_fraction, derive_seed(o.seed(), kSplitStream), true);
    // selection and standardization fit on the train split only; a top-k
    // wider than the table just keeps every column in both rankings
    const int k = std::min(top_k, static_cast<int>(split.train.n_cols()));
    const data::SelectionResult sel = data::select_features(split.train, k, corr);
    const Dataset test_sel = data::restrict_columns(split.test, sel.report.kept_columns);
    const data::StandardizeResult std_res = data::standardize(sel.dataset, {test_sel});

    data::save_dataset_csv(std_res.train, (o.out_dir() / "train.csv").string());
    data::save_dataset_csv(std_res.others[0], (o.out_dir() / "test.csv").string());
    write_json_file(o.out_dir() / "train.json",
                    data::dataset_sidecar(std_res.train, &std_res.stats, &sel.report));
    write_json_file(o.out_dir() / "test.json",
                    data::dataset_sidecar(std_res.others[0], &std_res.stats));

    json skipped = json::array();
    for (std::size_t i = 0; i < loaded.skipped.size() && i < 10; ++i)
        skipped.push_back(
            {{"row", loaded.skipped[i].row}, {"message", loaded.skipped[i].message}});
    const json summary{{"command", "preprocess"},
                       {"rows_read", loaded.records.size() + loaded.skipped.size()},
                       {"rows_skipped", loaded.skipped.size()},
                       {"skipped_sample", skipped},
                       {"rows_dropped", cleaned.dropped_count},
                       {"rows_clean", cleaned.kept.size()},
                       {"train_rows", std_res.train.n_rows()},
                       {"test_rows", std_res.others[0].n_rows()},
                       {"features_encoded", ds.n_cols()},
                       {"features_selected", std_res.train.n_cols()},
                       {"selected_features", std_res.train.feature_names},
                       {"seed", o.seed()},
                       {"config_hash", hash}};
    write_json_file(o.out_dir() / "summary.json", summary);
    return 0;
}

int cmd_gen_adv(Opts& o) {
    const std::string train_path = o.require_str("train");
    require_file(train_path, "train");
    const double epsilon = o.require_double("epsilon");
    const std::string feature_text = o.require_str("features");
    const double fraction = o.get_double("fraction", 0.2);

    const Dataset train = data::load_dataset_csv(train_path);
    const std::vector<int> features = parse_feature_list(feature_text, train.feature_names);
    std::string joined;
    for (const int f : features) {
        if (!joined.empty()) joined += ",";
        joined += std::to_string(f);
    }
    o.record("features", joined);
    const std::string& hash = o.finalize();

    adv::PerturbationConfig cfg;
    cfg.epsilon = epsilon;
    cfg.fraction = fraction;
    cfg.features = features;
    cfg.seed = o.seed();
    const adv::TrainingSetTriple triple = adv::build_training_sets(train, cfg);

    data::save_dataset_csv(triple.t2, (o.out_dir() / "t2.csv").string());
    data::save_dataset_csv(triple.t3, (o.out_dir() / "t3.csv").string());
    write_json_file(o.out_dir() / "t2.json", data::dataset_sidecar(triple.t2));
    write_json_file(o.out_dir() / "t3.json", data::dataset_sidecar(triple.t3));
    json prov = triple.provenance;
    prov["config_hash"] = hash;
    write_json_file(o.out_dir() / "provenance.json", prov);

    const json summary{{"command", "gen-adv"},
                       {"rows", train.n_rows()},
                       {"cols", train.n_cols()},
                       {"perturbed_rows", triple.fgsm_rows.size()},
                       {"seed", o.seed()},
                       {"config_hash", hash}};
    write_json_file(o.out_dir() / "summary.json", summary);
    return 0;
}

int cmd_train_ensemble(Opts& o) {
    const std::string p1 = o.require_str("t1");
    const std::string p2 = o.require_str("t2");
    const std::string p3 = o.require_str("t3");
    const std::string ptest = o.require_str("test");
    require_file(p1, "t1");
    require_file(p2, "t2");
    require_file(p3, "t3");
    require_file(ptest, "test");
    const clf::Kind level2_kind = parse_kind_arg(o.get_str("level2", "gaussian-nb"));
    o.record("level2", clf::kind_name(level2_kind));
    const int folds = static_cast<int>(o.get_int("folds", 5));
    if (folds < 2) throw UsageError("--folds: must be >= 2");
    const bool oof = o.get_flag("oof");
    const std::string grid_path = o.get_str("grid", "");
    if (!grid_path.empty()) require_file(grid_path, "grid");
    const std::string& hash = o.finalize();

    adv::TrainingSetTriple triple;
    triple.t1 = data::load_dataset_csv(p1);
    triple.t2 = data::load_dataset_csv(p2);
    triple.t3 = data::load_dataset_csv(p3);
    const Dataset test = data::load_dataset_csv(ptest);

    auto same_names = [&](const Dataset& d, const char* which) {
        if (d.feature_names != triple.t1.feature_names)
            throw UsageError(std::string("--") + which + ": feature columns differ from --t1");
    };
    same_names(triple.t2, "t2");
    same_names(triple.t3, "t3");
    same_names(test, "test");
    if (triple.t2.n_rows() != triple.t1.n_rows() || triple.t3.n_rows() != triple.t1.n_rows())
        throw UsageError("--t1/--t2/--t3: row counts differ");
    if ((triple.t2.labels.array() != triple.t1.labels.array()).any() ||
        (triple.t3.labels.array() != triple.t1.labels.array()).any())
        throw UsageError("--t1/--t2/--t3: labels differ");
    if (test.n_rows() == 0) throw UsageError("--test: empty test set");

    const VecI& y = triple.t1.labels;
    const std::vector<ens::MemberSpec> specs = ens::default_member_specs(o.seed());
    ens::Level1Stack stack = ens::train_level1(triple, specs, o.threads());

    const Matrix meta_t1 =
        oof ? ens::level1_meta_features_oof(triple, specs, folds,
                                            derive_seed(o.seed(), kOofStream), o.threads())
            : ens::level1_meta_features(stack, triple.t1.features);
    const Matrix meta_t2 = ens::level1_meta_features(stack, triple.t2.features);
    const Matrix meta_t3 = ens::level1_meta_features(stack, triple.t3.features);
    const Matrix meta_test = ens::level1_meta_features(stack, test.features);

    clf::HyperParams base_params;
    if (!grid_path.empty()) {
        std::vector<clf::HyperParams> grid;
        try {
            std::ifstream f(grid_path);
            const json arr = json::parse(f);
            if (!arr.is_array() || arr.empty())
                throw UsageError("--grid: expected a nonempty JSON array of hyperparams");
            for (const auto& g : arr) grid.push_back(clf::HyperParams::from_json(g));
        } catch (const json::exception& e) {
            throw UsageError(std::string("--grid: ") + e.what());
        }
        const ens::GridSearchResult gs =
            ens::grid_search(level2_kind, grid, meta_t1, y, folds,
                             derive_seed(o.seed(), kGridStream), o.threads());
        write_json_file(o.out_dir() / "grid_search.json", gs.to_json());
        base_params = gs.best_hyperparams;
    }

    const Matrix* metas[3] = {&meta_t1, &meta_t2, &meta_t3};
    std::unique_ptr<clf::Classifier> level2[3];
    double l2_seconds[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        clf::HyperParams p = base_params;
        p.seed = derive_seed(o.seed(), kLevel2Stream + static_cast<std::uint64_t>(i));
        const auto t0 = Clock::now();
        level2[i] = ens::train_level2(*metas[i], y, level2_kind, p);
        l2_seconds[i] = seconds_between(t0, Clock::now());
    }

    std::vector<metrics::MetricsReport> level1_reports;
    for (int i = 0; i < 3; ++i) {
        const VecD scores = meta_test.col(i);
        level1_reports.push_back(make_report(clf::kind_name(specs[std::size_t(i)].kind),
                                             "T" + std::to_string(i + 1), o.seed(), test.labels,
                                             predict_from_scores(scores), scores,
                                             stack.members[std::size_t(i)].train_seconds));
    }
    std::vector<metrics::MetricsReport> level2_reports;
    for (int i = 0; i < 3; ++i) {
        const Matrix proba = level2[i]->predict_proba(meta_test);
        const VecD scores = proba.col(1);
        const VecI preds = level2[i]->predict(meta_test);
        level2_reports.push_back(make_report(clf::kind_name(level2_kind),
                                             "T" + std::to_string(i + 1), o.seed(), test.labels,
                                             preds, scores, l2_seconds[i]));
        write_text_file(o.out_dir() / ("roc_t" + std::to_string(i + 1) + ".csv"),
                        metrics::roc_to_csv(metrics::roc_points(test.labels, scores)));
    }

    // the persisted pipeline pairs the stack with the T1-variant level 2
    ens::StackedEnsemble ensemble;
    for (int i = 0; i < 3; ++i)
        ensemble.meta_feature_names.push_back("t" + std::to_string(i + 1) + "_" +
                                              clf::kind_name(specs[std::size_t(i)].kind));
    ensemble.level1 = std::move(stack);
    ensemble.level2 = std::move(level2[0]);
    write_json_file(o.out_dir() / "ensemble.json", ensemble.to_json());

    json reports{{"config_hash", hash},
                 {"seed", o.seed()},
                 {"level2_kind", clf::kind_name(level2_kind)},
                 {"level1", json::array()},
                 {"level2", json::array()}};
    for (const auto& r : level1_reports) reports["level1"].push_back(r.to_json());
    for (const auto& r : level2_reports) reports["level2"].push_back(r.to_json());
    write_json_file(o.out_dir() / "reports.json", reports);

    std::vector<std::string> l1_rows;
    std::vector<std::vector<std::string>> l1_cells;
    const std::vector<std::string> set_cols = {"T1", "T2", "T3"};
    std::vector<std::vector<std::string>> f1_cells(1), sec_cells(1), auc_cells(1);
    for (int i = 0; i < 3; ++i) {
        l1_rows.push_back(clf::kind_name(specs[std::size_t(i)].kind) + " (T" +
                          std::to_string(i + 1) + ")");
        l1_cells.push_back({fmt4(level1_reports[std::size_t(i)].per_class.normal.f1),
                            fmt4(level1_reports[std::size_t(i)].per_class.malicious.f1)});
        f1_cells[0].push_back(fmt4(level2_reports[std::size_t(i)].per_class.malicious.f1));
        sec_cells[0].push_back(fmt4(level2_reports[std::size_t(i)].train_seconds));
        auc_cells[0].push_back(fmt4(level2_reports[std::size_t(i)].auc));
    }
    const std::vector<std::string> l2_row = {clf::kind_name(level2_kind)};
    std::string tables;
    tables += metrics::format_table("Level 1 F1 on the test set", l1_rows,
                                    {"f1_normal", "f1_malicious"}, l1_cells);
    tables += "\n";
    tables += metrics::format_table("Level 2 malicious F1 by training set", l2_row, set_cols,
                                    f1_cells);
    tables += "\n";
    tables += metrics::format_table("Level 2 training seconds", l2_row, set_cols, sec_cells);
    tables += "\n";
    tables += metrics::format_table("Level 2 AUC", l2_row, set_cols, auc_cells);
    write_text_file(o.out_dir() / "tables.txt", tables);

    const json summary{{"command", "train-ensemble"},
                       {"train_rows", triple.t1.n_rows()},
                       {"test_rows", test.n_rows()},
                       {"features", triple.t1.n_cols()},
                       {"level2", clf::kind_name(level2_kind)},
                       {"folds", folds},
                       {"oof", oof},
                       {"grid_searched", !grid_path.empty()},
                       {"malicious_f1",
                        json::array({level2_reports[0].per_class.malicious.f1,
                                     level2_reports[1].per_class.malicious.f1,
                                     level2_reports[2].per_class.malicious.f1})},
                       {"seed", o.seed()},
                       {"config_hash", hash}};
    write_json_file(o.out_dir() / "summary.json", summary);
    return 0;
}

int cmd_midas(Opts& o) {
    const std::string edges_path = o.get_str("edges", "");
    const std::string flows_path = o.get_str("flows", "");
    if (edges_path.empty() == flows_path.empty())
        throw UsageError("exactly one of --edges or --flows is required");
    const double tick = o.get_double("tick", 1.0);
    const int depth = static_cast<int>(o.get_int("depth", 2));
    const int width = static_cast<int>(o.get_int("width", 1024));
    const std::string filter = o.get_str("filter", "");
    const bool sort = o.get_flag("sort");
    const std::string labels_path = o.get_str("labels", "");
    if (depth < 1) throw UsageError("--depth: must be >= 1");
    if (width < 1) throw UsageError("--width: must be >= 1");
    if (!(tick > 0.0)) throw UsageError("--tick: must be > 0");
    if (!filter.empty() && flows_path.empty())
        throw UsageError("--filter applies only to --flows input");
    if (!labels_path.empty() && edges_path.empty())
        throw UsageError("--labels applies only to --edges input");
    std::string schema_path;
    if (!flows_path.empty()) schema_path = o.require_str("schema");
    const std::string& hash = o.finalize();

    std::vector<midas::EdgeEvent> events;
    std::size_t filtered_out = 0;
    if (!flows_path.empty()) {
        require_file(flows_path, "flows");
        require_file(schema_path, "schema");
        const data::Schema schema = data::Schema::load(schema_path);
        data::LoadResult loaded = data::load_flow_csv(flows_path, schema);
        std::vector<data::FlowRecord> records = std::move(loaded.records);
        if (!filter.empty()) {
            const auto eq = filter.find('=');
            if (eq == std::string::npos) throw UsageError("--filter: expected column=value");
            const std::string col = trim(filter.substr(0, eq));
            const std::string want = trim(filter.substr(eq + 1));
            const int ni = schema.nominal_index(col);
            if (ni < 0) throw UsageError("--filter: '" + col + "' is not a nominal column");
            std::vector<data::FlowRecord> kept;
            for (auto& r : records)
                if (r.nominal_values[static_cast<std::size_t>(ni)] == want)
                    kept.push_back(std::move(r));
            filtered_out = records.size() - kept.size();
            records = std::move(kept);
        }
        events = midas::flows_to_edges(records, tick);
    } else {
        require_file(edges_path, "edges");
        events = midas::load_edge_csv(edges_path);
    }
    if (events.empty()) throw UsageError("no events to stream");

    VecI labels;
    if (!labels_path.empty()) {
        require_file(labels_path, "labels");
        labels = load_label_csv(labels_path);
        if (static_cast<std::size_t>(labels.size()) != events.size())
            throw UsageError("--labels: row count differs from the event count");
    }
    if (sort) {
        std::vector<std::size_t> order(events.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&events](std::size_t a, std::size_t b) {
            return events[a].t < events[b].t;
        });
        std::vector<midas::EdgeEvent> sorted;
        sorted.reserve(events.size());
        for (const std::size_t i : order) sorted.push_back(std::move(events[i]));
        events = std::move(sorted);
        if (labels.size() > 0) {
            VecI relabeled(labels.size());
            for (Eigen::Index i = 0; i < relabeled.size(); ++i)
                relabeled[i] = labels[static_cast<Eigen::Index>(order[std::size_t(i)])];
            labels = std::move(relabeled);
        }
    }

    midas::MidasParams params;
    params.depth = depth;
    params.width = width;
    params.seed = derive_seed(o.seed(), kCmsStream);
    std::vector<midas::ScoredEvent> scored;
    const auto t0 = Clock::now();
    try {
        scored = midas::process_stream(events, params);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string(e.what()) + "; pass --sort to order events by tick");
    }
    const double elapsed = seconds_between(t0, Clock::now());

    midas::save_scores_csv(scored, (o.out_dir() / "scores.csv").string());

    double max_score = 0.0;
    std::int64_t max_tick = 0;
    for (const auto& s : scored) {
        max_score = std::max(max_score, s.score);
        max_tick = std::max(max_tick, s.event.t);
    }
    json summary{{"command", "midas"},
                 {"events", scored.size()},
                 {"ticks", max_tick},
                 {"depth", depth},
                 {"width", width},
                 {"max_score", max_score},
                 {"elapsed_seconds", elapsed},
                 {"events_per_sec", static_cast<double>(scored.size()) / std::max(elapsed, 1e-9)},
                 {"seed", o.seed()},
                 {"config_hash", hash}};
    if (!flows_path.empty()) summary["tick_seconds"] = tick;
    if (!filter.empty()) {
        summary["filter"] = filter;
        summary["filtered_out"] = filtered_out;
    }
    if (labels.size() > 0 && has_both_classes(labels)) {
        VecD scores(static_cast<Eigen::Index>(scored.size()));
        for (Eigen::Index i = 0; i < scores.size(); ++i)
            scores[i] = scored[static_cast<std::size_t>(i)].score;
        summary["auc"] = metrics::auc(labels, scores);
    }
    write_json_file(o.out_dir() / "summary.json", summary);
    return 0;
}

int cmd_baselines(Opts& o) {
    const std::string input = o.require_str("input");
    require_file(input, "input");
    const int trees = static_cast<int>(o.get_int("trees", 100));
    const int subsample = static_cast<int>(o.get_int("subsample", 256));
    const int k = static_cast<int>(o.get_int("k", 20));
    const double contamination = o.get_double("contamination", 0.1);
    if (trees < 1) throw UsageError("--trees: must be >= 1");
    if (subsample < 2) throw UsageError("--subsample: must be >= 2");
    if (k < 1) throw UsageError("--k: must be >= 1");
    if (!(contamination > 0.0 && contamination < 1.0))
        throw UsageError("--contamination: must be in (0, 1)");
    const std::string& hash = o.finalize();

    const Dataset ds = data::load_dataset_csv(input);
    if (k >= ds.n_rows()) throw UsageError("--k: must be < the number of rows");

    const VecD iso = base::isolation_forest_score(ds.features, trees, subsample,
                                                  derive_seed(o.seed(), kIforestStream),
                                                  o.threads());
    const VecD lof = base::lof_score(ds.features, k, o.threads());

    auto write_scores = [&](const char* name, const VecD& s) {
        std::vector<std::vector<std::string>> rows;
        rows.reserve(static_cast<std::size_t>(s.size()) + 1);
        rows.push_back({"row", "score"});
        for (Eigen::Index i = 0; i < s.size(); ++i)
            rows.push_back({std::to_string(i), format_double(s[i])});
        csv::write_file((o.out_dir() / name).string(), rows);
    };
    write_scores("iforest.csv", iso);
    write_scores("lof.csv", lof);

    const bool both = has_both_classes(ds.labels);
    json methods = json::array();
    auto push_method = [&](const std::string& name, const VecD& s) {
        const VecI flagged = base::threshold_by_quantile(s, contamination);
        json m{{"name", name}, {"flagged", flagged.sum()}};
        if (both) {
            m["auc"] = metrics::auc(ds.labels, s);
            std::int64_t tp = 0, fn = 0;
            for (Eigen::Index i = 0; i < s.size(); ++i) {
                if (ds.labels[i] != 1) continue;
                if (flagged[i] == 1) ++tp;
                else ++fn;
            }
            m["recall_at_quantile"] = tp + fn > 0
                                          ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                                          : 0.0;
        }
        methods.push_back(std::move(m));
    };
    push_method("isolation_forest", iso);
    push_method("lof", lof);

    write_json_file(o.out_dir() / "reports.json", json{{"config_hash", hash},
                                                       {"seed", o.seed()},
                                                       {"contamination", contamination},
                                                       {"methods", methods}});
    write_json_file(o.out_dir() / "summary.json", json{{"command", "baselines"},
                                                       {"rows", ds.n_rows()},
                                                       {"cols", ds.n_cols()},
                                                       {"seed", o.seed()},
                                                       {"config_hash", hash}});
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"network anomaly detection toolkit: preprocessing, adversarial training sets, "
                 "a stacked ensemble, streaming edge scores, and unsupervised baselines"};
    app.require_subcommand(1);

    std::map<std::string, std::map<std::string, std::string>> sinks;  // sub -> key -> raw value
    std::map<std::string, std::string> config_paths;                  // sub -> --config value

    auto add_str = [&sinks](CLI::App* sub, const std::string& key, const std::string& desc) {
        const std::string name = sub->get_name();
        sub->add_option_function<std::string>(
            "--" + key, [&sinks, name, key](const std::string& v) { sinks[name][key] = v; },
            desc);
    };
    auto add_flag = [&sinks](CLI::App* sub, const std::string& key, const std::string& desc) {
        const std::string name = sub->get_name();
        sub->add_flag_function(
            "--" + key,
            [&sinks, name, key](std::int64_t n) {
                if (n > 0) sinks[name][key] = "true";
            },
            desc);
    };
    auto add_common = [&](CLI::App* sub) {
        add_str(sub, "seed", "top-level random seed (default 1)");
        add_str(sub, "threads", "worker threads (default 1; results do not depend on it)");
        add_str(sub, "out-dir", "output directory (default out)");
        const std::string name = sub->get_name();
        sub->add_option_function<std::string>(
            "--config",
            [&config_paths, name](const std::string& v) { config_paths[name] = v; },
            "key = value config file with [section] headers; flags win");
    };

    CLI::App* synth =
        app.add_subcommand("synth", "generate a synthetic dataset, flow table, or edge stream");
    add_common(synth);
    add_str(synth, "mode", "dataset | flows | edges (default dataset)");
    add_str(synth, "normal", "normal rows (default 700)");
    add_str(synth, "malicious", "malicious rows (default 300)");
    add_str(synth, "features", "numeric feature count (default 10)");
    add_str(synth, "separation", "class mean gap in feature units (default 1.5)");
    add_str(synth, "ticks", "edge stream length in ticks (default 200)");
    add_str(synth, "rate", "background events per tick (default 50)");
    add_str(synth, "nodes", "node pool size (default 30)");
    add_str(synth, "bursts", "injected burst count (default 5)");
    add_str(synth, "burst-size", "events per burst (default 300)");

    CLI::App* preprocess = app.add_subcommand(
        "preprocess", "load, clean, encode, split, select features, and standardize a flow CSV");
    add_common(preprocess);
    add_str(preprocess, "input", "flow CSV (required)");
    add_str(preprocess, "schema", "schema file describing the CSV columns (required)");
    add_str(preprocess, "test-fraction", "held-out fraction for the test split (default 0.3)");
    add_str(preprocess, "top-k", "columns kept per ranking before the union (default 15)");
    add_str(preprocess, "corr-threshold", "pairwise |r| cutoff for the filter (default 0.85)");

    CLI::App* genadv = app.add_subcommand(
        "gen-adv", "derive the perturbed training sets T2 and T3 from a standardized train CSV");
    add_common(genadv);
    add_str(genadv, "train", "standardized training dataset CSV (required)");
    add_str(genadv, "epsilon", "perturbation step in standardized units (required)");
    add_str(genadv, "features", "mean-shift columns, comma-separated indices or names (required)");
    add_str(genadv, "fraction", "share of rows perturbed by the evasion attack (default 0.2)");

    CLI::App* trainens = app.add_subcommand(
        "train-ensemble", "train the two-level stack on T1/T2/T3 and evaluate on a test CSV");
    add_common(trainens);
    add_str(trainens, "t1", "original training dataset CSV (required)");
    add_str(trainens, "t2", "evasion-perturbed dataset CSV (required)");
    add_str(trainens, "t3", "mean-shift-perturbed dataset CSV (required)");
    add_str(trainens, "test", "held-out test dataset CSV (required)");
    add_str(trainens, "level2", "level-2 classifier kind (default gaussian-nb)");
    add_str(trainens, "folds", "folds for grid search and --oof (default 5)");
    add_str(trainens, "grid", "JSON array of level-2 hyperparameter candidates");
    add_flag(trainens, "oof", "build level-2 training features out-of-fold");

    CLI::App* midas_sub = app.add_subcommand(
        "midas", "score an edge stream for micro-cluster anomalies with a count-min sketch");
    add_common(midas_sub);
    add_str(midas_sub, "edges", "edge CSV with header u,v,t");
    add_str(midas_sub, "flows", "flow CSV; timestamps are bucketed into ticks");
    add_str(midas_sub, "schema", "schema for --flows");
    add_str(midas_sub, "tick", "tick width in seconds for --flows (default 1)");
    add_str(midas_sub, "depth", "sketch rows (default 2)");
    add_str(midas_sub, "width", "sketch columns (default 1024)");
    add_str(midas_sub, "filter", "keep only flows whose nominal column matches, e.g. proto=dns");
    add_flag(midas_sub, "sort", "sort events by tick before streaming");
    add_str(midas_sub, "labels", "per-event 0/1 labels CSV for --edges; enables AUC");

    CLI::App* baselines_sub = app.add_subcommand(
        "baselines", "isolation forest and LOF scores for a dataset CSV");
    add_common(baselines_sub);
    add_str(baselines_sub, "input", "dataset CSV (required)");
    add_str(baselines_sub, "trees", "isolation forest size (default 100)");
    add_str(baselines_sub, "subsample", "rows per isolation tree (default 256)");
    add_str(baselines_sub, "k", "LOF neighborhood size (default 20)");
    add_str(baselines_sub, "contamination", "expected anomaly share for thresholds (default 0.1)");

    CLI::App* subs[] = {synth, preprocess, genadv, trainens, midas_sub, baselines_sub};

    try {
        std::vector<std::string> argvv;
        argvv.reserve(args.size() + 1);
        argvv.push_back("netanom");
        for (const auto& a : args) argvv.push_back(a);
        std::vector<const char*> argv;
        argv.reserve(argvv.size());
        for (const auto& s : argvv) argv.push_back(s.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());

        CLI::App* active = nullptr;
        for (CLI::App* s : subs)
            if (app.got_subcommand(s)) {
                active = s;
                break;
            }
        if (!active) throw UsageError("a subcommand is required");

        const std::string name = active->get_name();
        std::map<std::string, std::string> config;
        if (const auto it = config_paths.find(name); it != config_paths.end())
            config = load_config(it->second);
        Opts o(name, std::move(config), sinks[name]);
        o.resolve_common();
        fs::create_directories(o.out_dir());

        if (name == "synth") return cmd_synth(o);
        if (name == "preprocess") return cmd_preprocess(o);
        if (name == "gen-adv") return cmd_gen_adv(o);
        if (name == "train-ensemble") return cmd_train_ensemble(o);
        if (name == "midas") return cmd_midas(o);
        return cmd_baselines(o);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace netanom::cli
