#include "netanom/dataset.hpp"

#include "netanom/csv.hpp"
#include "netanom/rng.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace netanom::data {

using nlohmann::json;

ColumnKind parse_kind(const std::string& token) {
    const std::string t = lower(token);
    if (t == "numeric") return ColumnKind::Numeric;
    if (t == "nominal") return ColumnKind::Nominal;
    if (t == "ip") return ColumnKind::Ip;
    if (t == "port") return ColumnKind::Port;
    if (t == "timestamp") return ColumnKind::Timestamp;
    if (t == "label") return ColumnKind::Label;
    if (t == "category") return ColumnKind::Category;
    throw std::invalid_argument("schema: unknown column kind '" + token + "'");
}

std::string kind_name(ColumnKind k) {
    switch (k) {
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Nominal: return "nominal";
        case ColumnKind::Ip: return "ip";
        case ColumnKind::Port: return "port";
        case ColumnKind::Timestamp: return "timestamp";
        case ColumnKind::Label: return "label";
        case ColumnKind::Category: return "category";
    }
    return "?";
}

Schema Schema::parse(const std::string& text) {
    Schema schema;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        std::string name, kind, keep;
        ls >> name >> kind >> keep;
        // allow comma separators too
        if (name.find(',') != std::string::npos) {
            auto fields = csv::split_line(t);
            if (fields.size() != 3) {
                throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                            ": expected 'name kind keep|drop'");
            }
            name = trim(fields[0]);
            kind = trim(fields[1]);
            keep = trim(fields[2]);
        }
        if (name.empty() || kind.empty() || keep.empty()) {
            throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                        ": expected 'name kind keep|drop'");
        }
        SchemaColumn col;
        col.name = name;
        col.kind = parse_kind(kind);
        const std::string k = lower(keep);
        if (k == "keep") col.keep = true;
        else if (k == "drop") col.keep = false;
        else
            throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                        ": flag must be keep or drop, got '" + keep + "'");
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

Schema Schema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Schema::to_text() const {
    std::string out;
    for (const auto& c : columns) {
        out += c.name + " " + kind_name(c.kind) + " " + (c.keep ? "keep" : "drop") + "\n";
    }
    return out;
}

void Schema::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open schema file for writing: " + path);
    out << to_text();
}

std::vector<std::string> Schema::nominal_names() const {
    std::vector<std::string> names;
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::Nominal) names.push_back(c.name);
    }
    return names;
}

int Schema::nominal_index(const std::string& name) const {
    int idx = 0;
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::Nominal) {
            if (c.name == name) return idx;
            ++idx;
        }
    }
    return -1;
}

void Schema::validate() const {
    if (columns.empty()) throw std::invalid_argument("schema: no columns");
    std::set<std::string> names;
    int labels = 0, ips = 0, ports = 0, timestamps = 0;
    for (const auto& c : columns) {
        if (!names.insert(c.name).second) {
            throw std::invalid_argument("schema: duplicate column '" + c.name + "'");
        }
        switch (c.kind) {
            case ColumnKind::Label: ++labels; break;
            case ColumnKind::Ip: ++ips; break;
            case ColumnKind::Port: ++ports; break;
            case ColumnKind::Timestamp: ++timestamps; break;
            default: break;
        }
    }
    if (labels != 1) throw std::invalid_argument("schema: exactly one label column required");
    if (ips > 2) throw std::invalid_argument("schema: at most two ip columns (src, dst)");
    if (ports > 2) throw std::invalid_argument("schema: at most two port columns (src, dst)");
    if (timestamps > 1) throw std::invalid_argument("schema: at most one timestamp column");
}

LoadResult load_flow_csv(const std::string& path, const Schema& schema) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw std::runtime_error("empty csv: " + path);

    const auto& header = rows.front();
    if (header.size() != schema.columns.size()) {
        throw std::runtime_error("header mismatch: csv has " + std::to_string(header.size()) +
                                 " columns, schema declares " +
                                 std::to_string(schema.columns.size()));
    }
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (trim(header[j]) != schema.columns[j].name) {
            throw std::runtime_error("header mismatch at column " + std::to_string(j + 1) +
                                     ": csv says '" + trim(header[j]) + "', schema says '" +
                                     schema.columns[j].name + "'");
        }
    }

    LoadResult result;
    result.records.reserve(rows.size() - 1);
    const std::size_t n_nominal = schema.nominal_names().size();

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        if (fields.size() != schema.columns.size()) {
            throw std::runtime_error("row " + std::to_string(r) + ": expected " +
                                     std::to_string(schema.columns.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        FlowRecord rec;
        rec.nominal_values.resize(n_nominal);
        int port_seen = 0, ip_seen = 0, nominal_seen = 0;
        std::string bad;
        for (std::size_t j = 0; j < fields.size() && bad.empty(); ++j) {
            const auto& col = schema.columns[j];
            const std::string value = trim(fields[j]);
            switch (col.kind) {
                case ColumnKind::Numeric: {
                    if (!col.keep) break;
                    double v;
                    // empty numeric cells read as 0, matching flow exports
                    if (value.empty()) v = 0.0;
                    else if (!parse_double(value, v)) {
                        bad = "unparseable numeric '" + value + "' in column " + col.name;
                        break;
                    }
                    rec.numeric_values.push_back(v);
                    break;
                }
                case ColumnKind::Port: {
                    std::int64_t p;
                    if (value.empty()) p = -1;
                    else if (!parse_int64(value, p)) {
                        // hex ports appear in some captures; anything else is a report
                        double pv;
                        if (value.rfind("0x", 0) == 0 || !parse_double(value, pv)) {
                            bad = "unparseable port '" + value + "' in column " + col.name;
                            break;
                        }
                        p = static_cast<std::int64_t>(pv);
                    }
                    if (port_seen == 0) rec.src_port = p;
                    else rec.dst_port = p;
                    ++port_seen;
                    break;
                }
                case ColumnKind::Ip: {
                    if (ip_seen == 0) rec.src_ip = value;
                    else rec.dst_ip = value;
                    ++ip_seen;
                    break;
                }
                case ColumnKind::Timestamp: {
                    double v;
                    if (!parse_double(value, v)) {
                        bad = "unparseable timestamp '" + value + "'";
                        break;
                    }
                    rec.timestamp = v;
                    break;
                }
                case ColumnKind::Nominal: {
                    rec.nominal_values[nominal_seen++] = value;
                    break;
                }
                case ColumnKind::Label: {
                    std::int64_t v;
                    if (!parse_int64(value, v)) {
                        bad = "unparseable label '" + value + "'";
                        break;
                    }
                    rec.label = static_cast<int>(v);
                    break;
                }
                case ColumnKind::Category: {
                    rec.attack_category = value;
                    break;
                }
            }
        }
        if (!bad.empty()) {
            result.skipped.push_back({r, bad});
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

namespace {

bool record_ok(const FlowRecord& rec) {
    if (rec.src_port < -1 || rec.src_port > 65535) return false;
    if (rec.dst_port < -1 || rec.dst_port > 65535) return false;
    if (rec.label != 0 && rec.label != 1) return false;
    for (double v : rec.numeric_values) {
        if (!std::isfinite(v) || v < 0.0) return false;
    }
    return std::isfinite(rec.timestamp);
}

}  // namespace

CleanResult clean(const std::vector<FlowRecord>& records) {
    CleanResult result;
    result.kept.reserve(records.size());
    for (const auto& rec : records) {
        if (record_ok(rec)) result.kept.push_back(rec);
        else ++result.dropped_count;
    }
    return result;
}

namespace {

std::vector<std::string> frequency_order(const std::vector<std::string>& tokens) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ordered;
    ordered.reserve(items.size());
    for (auto& [tok, cnt] : items) ordered.push_back(tok);
    return ordered;
}

struct FeatureSource {
    std::string name;
    ColumnKind kind;
    int sub = 0;  // numeric slot, port/ip ordinal, or nominal index
};

std::vector<FeatureSource> feature_layout(const Schema& schema) {
    std::vector<FeatureSource> layout;
    int numeric = 0, port = 0, ip = 0;
    for (const auto& col : schema.columns) {
        switch (col.kind) {
            case ColumnKind::Numeric:
                if (col.keep) layout.push_back({col.name, col.kind, numeric});
                if (col.keep) ++numeric;
                break;
            case ColumnKind::Port:
                if (col.keep) layout.push_back({col.name, col.kind, port});
                ++port;
                break;
            case ColumnKind::Ip:
                if (col.keep) layout.push_back({col.name, col.kind, ip});
                ++ip;
                break;
            case ColumnKind::Timestamp:
                if (col.keep) layout.push_back({col.name, col.kind, 0});
                break;
            case ColumnKind::Nominal: {
                if (col.keep) layout.push_back({col.name, col.kind, 0});
                break;
            }
            default: break;
        }
    }
    // resolve nominal sub-indices against the full nominal list
    for (auto& f : layout) {
        if (f.kind == ColumnKind::Nominal) f.sub = schema.nominal_index(f.name);
    }
    return layout;
}

std::string source_token(const FlowRecord& rec, const FeatureSource& src) {
    if (src.kind == ColumnKind::Ip) return src.sub == 0 ? rec.src_ip : rec.dst_ip;
    return rec.nominal_values[static_cast<std::size_t>(src.sub)];
}

Dataset encode_impl(const std::vector<FlowRecord>& records, const Schema& schema,
                    const std::map<std::string, std::vector<std::string>>* fixed_maps) {
    const auto layout = feature_layout(schema);
    const Eigen::Index n = static_cast<Eigen::Index>(records.size());
    const Eigen::Index m = static_cast<Eigen::Index>(layout.size());

    Dataset ds;
    ds.features.resize(n, m);
    ds.labels.resize(n);
    for (const auto& f : layout) ds.feature_names.push_back(f.name);

    // token -> code per encoded column
    std::vector<std::map<std::string, double>> codes(layout.size());
    for (std::size_t j = 0; j < layout.size(); ++j) {
        const auto& f = layout[j];
        if (f.kind != ColumnKind::Nominal && f.kind != ColumnKind::Ip) continue;
        std::vector<std::string> ordered;
        if (fixed_maps) {
            auto it = fixed_maps->find(f.name);
            if (it == fixed_maps->end()) {
                throw std::invalid_argument("encode: no stored map for column '" + f.name + "'");
            }
            ordered = it->second;
        } else {
            std::vector<std::string> tokens;
            tokens.reserve(records.size());
            for (const auto& rec : records) tokens.push_back(source_token(rec, f));
            ordered = frequency_order(tokens);
        }
        for (std::size_t c = 0; c < ordered.size(); ++c) {
            codes[j][ordered[c]] = static_cast<double>(c);
        }
        ds.nominal_maps[f.name] = std::move(ordered);
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        ds.labels[i] = rec.label;
        for (std::size_t j = 0; j < layout.size(); ++j) {
            const auto& f = layout[j];
            double v = 0.0;
            switch (f.kind) {
                case ColumnKind::Numeric:
                    v = rec.numeric_values[static_cast<std::size_t>(f.sub)];
                    break;
                case ColumnKind::Port:
                    v = static_cast<double>(f.sub == 0 ? rec.src_port : rec.dst_port);
                    break;
                case ColumnKind::Timestamp:
                    v = rec.timestamp;
                    break;
                case ColumnKind::Nominal:
                case ColumnKind::Ip: {
                    const std::string tok = source_token(rec, f);
                    auto it = codes[j].find(tok);
                    // unseen tokens share the code one past the stored range
                    v = it != codes[j].end() ? it->second
                                             : static_cast<double>(codes[j].size());
                    break;
                }
                default: break;
            }
            ds.features(i, static_cast<Eigen::Index>(j)) = v;
        }
    }
    ds.validate();
    return ds;
}

}  // namespace

Dataset encode_nominal(const std::vector<FlowRecord>& records, const Schema& schema) {
    return encode_impl(records, schema, nullptr);
}

Dataset encode_nominal(const std::vector<FlowRecord>& records, const Schema& schema,
                       const std::map<std::string, std::vector<std::string>>& maps) {
    return encode_impl(records, schema, &maps);
}

VecD chi2_scores(const Matrix& features, const VecI& labels) {
    const Eigen::Index n = features.rows();
    const Eigen::Index m = features.cols();
    if (n != labels.size()) throw std::invalid_argument("chi2: row/label mismatch");

    double n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) n1 += labels[i];
    const double prior1 = n == 0 ? 0.0 : n1 / static_cast<double>(n);
    const double prior0 = 1.0 - prior1;

    VecD scores = VecD::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double lo = features.col(j).minCoeff();
        const double hi = features.col(j).maxCoeff();
        if (hi <= lo) continue;  // constant column scores 0
        const double range = hi - lo;
        double obs0 = 0.0, obs1 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = (features(i, j) - lo) / range;
            if (labels[i] == 1) obs1 += s;
            else obs0 += s;
        }
        const double total = obs0 + obs1;
        if (total <= 0.0) continue;
        double stat = 0.0;
        const double e0 = prior0 * total;
        const double e1 = prior1 * total;
        if (e0 > 0.0) stat += (obs0 - e0) * (obs0 - e0) / e0;
        if (e1 > 0.0) stat += (obs1 - e1) * (obs1 - e1) / e1;
        scores[j] = stat;
    }
    return scores;
}

VecD mutual_info_scores(const Matrix& features, const VecI& labels, int bins) {
    const Eigen::Index n = features.rows();
    const Eigen::Index m = features.cols();
    if (n != labels.size()) throw std::invalid_argument("mutual_info: row/label mismatch");
    if (n < 2) throw std::invalid_argument("mutual_info: need at least 2 rows");
    if (bins < 2) throw std::invalid_argument("mutual_info: bins must be >= 2");

    VecD scores = VecD::Zero(m);
    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = features(i, j);
        std::sort(sorted.begin(), sorted.end());

        // equal-frequency cut points; duplicates collapse
        std::vector<double> cuts;
        for (int k = 1; k < bins; ++k) {
            const auto idx = static_cast<std::size_t>(
                static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n) /
                static_cast<std::uint64_t>(bins));
            cuts.push_back(sorted[std::min<std::size_t>(idx, static_cast<std::size_t>(n) - 1)]);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        const std::size_t n_bins = cuts.size() + 1;
        std::vector<double> joint(n_bins * 2, 0.0);
        std::vector<double> bin_tot(n_bins, 0.0);
        double class_tot[2] = {0.0, 0.0};
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto b = static_cast<std::size_t>(
                std::upper_bound(cuts.begin(), cuts.end(), features(i, j)) - cuts.begin());
            const int y = labels[i];
            joint[b * 2 + static_cast<std::size_t>(y)] += 1.0;
            bin_tot[b] += 1.0;
            class_tot[y] += 1.0;
        }
        double mi = 0.0;
        const double dn = static_cast<double>(n);
        for (std::size_t b = 0; b < n_bins; ++b) {
            for (int y = 0; y < 2; ++y) {
                const double c = joint[b * 2 + static_cast<std::size_t>(y)];
                if (c <= 0.0) continue;
                mi += (c / dn) * std::log(c * dn / (bin_tot[b] * class_tot[y]));
            }
        }
        scores[j] = std::max(0.0, mi);
    }
    return scores;
}

std::vector<int> correlation_filter(const Matrix& features, double threshold) {
    const Eigen::Index n = features.rows();
    const Eigen::Index m = features.cols();
    if (m < 1) throw std::invalid_argument("correlation_filter: no columns");

    VecD means(m), stds(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        means[j] = features.col(j).mean();
        stds[j] = std::sqrt((features.col(j).array() - means[j]).square().mean());
    }
    std::vector<int> kept;
    for (Eigen::Index j = 0; j < m; ++j) {
        bool drop = false;
        for (int k : kept) {
            if (stds[j] == 0.0 || stds[k] == 0.0) continue;  // constant correlates 0
            const double cov =
                ((features.col(j).array() - means[j]) * (features.col(k).array() - means[k]))
                    .mean();
            const double r = cov / (stds[j] * stds[k]);
            if (std::abs(r) > threshold) {
                drop = true;
                break;
            }
        }
        if (!drop) kept.push_back(static_cast<int>(j));
    }
    (void)n;
    return kept;
}

namespace {

std::vector<int> top_k_indices(const VecD& scores, int k) {
    std::vector<int> idx(static_cast<std::size_t>(scores.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

}  // namespace

Dataset restrict_columns(const Dataset& ds, const std::vector<int>& cols) {
    Dataset out;
    out.features.resize(ds.features.rows(), static_cast<Eigen::Index>(cols.size()));
    out.labels = ds.labels;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.features.col(static_cast<Eigen::Index>(j)) = ds.features.col(cols[j]);
        out.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(cols[j])]);
    }
    for (const auto& name : out.feature_names) {
        auto it = ds.nominal_maps.find(name);
        if (it != ds.nominal_maps.end()) out.nominal_maps[name] = it->second;
    }
    return out;
}

json SelectionReport::to_json() const {
    json scores = json::array();
    for (Eigen::Index j = 0; j < chi2.size(); ++j) {
        scores.push_back({{"name", names[static_cast<std::size_t>(j)]},
                          {"chi2", chi2[j]},
                          {"mutual_info", mutual_info[j]}});
    }
    auto name_list = [&](const std::vector<int>& cols) {
        json arr = json::array();
        for (int c : cols) arr.push_back(names[static_cast<std::size_t>(c)]);
        return arr;
    };
    json drops = json::array();
    for (const auto& [dropped, against] : correlation_drops) {
        drops.push_back({{"dropped", names[static_cast<std::size_t>(dropped)]},
                         {"against", against >= 0 ? names[static_cast<std::size_t>(against)]
                                                  : std::string("?")}});
    }
    return json{{"top_k", top_k},
                {"corr_threshold", corr_threshold},
                {"scores", scores},
                {"chi2_top", name_list(chi2_top)},
                {"mutual_info_top", name_list(mi_top)},
                {"union", name_list(union_columns)},
                {"kept", name_list(kept_columns)},
                {"correlation_drops", drops}};
}

SelectionResult select_features(const Dataset& dataset, int top_k, double corr_threshold) {
    const Eigen::Index m = dataset.n_cols();
    if (top_k < 1) throw std::invalid_argument("select_features: top_k must be >= 1");
    if (top_k > m) {
        throw std::invalid_argument("select_features: top_k " + std::to_string(top_k) +
                                    " exceeds column count " + std::to_string(m));
    }

    SelectionReport report;
    report.names = dataset.feature_names;
    report.top_k = top_k;
    report.corr_threshold = corr_threshold;
    report.chi2 = chi2_scores(dataset.features, dataset.labels);
    report.mutual_info = mutual_info_scores(dataset.features, dataset.labels);
    report.chi2_top = top_k_indices(report.chi2, top_k);
    report.mi_top = top_k_indices(report.mutual_info, top_k);

    std::set<int> union_set(report.chi2_top.begin(), report.chi2_top.end());
    union_set.insert(report.mi_top.begin(), report.mi_top.end());
    report.union_columns.assign(union_set.begin(), union_set.end());

    Dataset narrowed = restrict_columns(dataset, report.union_columns);
    const auto kept_local = correlation_filter(narrowed.features, corr_threshold);

    std::set<int> kept_set;
    for (int k : kept_local) {
        report.kept_columns.push_back(report.union_columns[static_cast<std::size_t>(k)]);
        kept_set.insert(k);
    }
    // reconstruct which kept column each dropped one collided with
    for (std::size_t j = 0; j < report.union_columns.size(); ++j) {
        if (kept_set.count(static_cast<int>(j))) continue;
        int against = -1;
        const auto& X = narrowed.features;
        const double mj = X.col(static_cast<Eigen::Index>(j)).mean();
        const double sj =
            std::sqrt((X.col(static_cast<Eigen::Index>(j)).array() - mj).square().mean());
        for (int k : kept_local) {
            if (k >= static_cast<int>(j)) break;
            const double mk = X.col(k).mean();
            const double sk = std::sqrt((X.col(k).array() - mk).square().mean());
            if (sj == 0.0 || sk == 0.0) continue;
            const double cov = ((X.col(static_cast<Eigen::Index>(j)).array() - mj) *
                                (X.col(k).array() - mk))
                                   .mean();
            if (std::abs(cov / (sj * sk)) > corr_threshold) {
                against = report.union_columns[static_cast<std::size_t>(k)];
                break;
            }
        }
        report.correlation_drops.push_back(
            {report.union_columns[j], against});
    }

    SelectionResult result;
    result.dataset = restrict_columns(dataset, report.kept_columns);
    result.report = std::move(report);
    return result;
}

FeatureStats fit_stats(const Matrix& features) {
    const Eigen::Index m = features.cols();
    FeatureStats stats;
    stats.means.resize(m);
    stats.stds.resize(m);
    stats.constant_mask.assign(static_cast<std::size_t>(m), 0);
    for (Eigen::Index j = 0; j < m; ++j) {
        const bool constant =
            features.rows() > 0 && (features.col(j).array() == features(0, j)).all();
        stats.means[j] = features.rows() > 0 ? features.col(j).mean() : 0.0;
        if (constant) {
            stats.stds[j] = 1.0;
            stats.constant_mask[static_cast<std::size_t>(j)] = 1;
        } else {
            stats.stds[j] =
                std::sqrt((features.col(j).array() - stats.means[j]).square().mean());
            if (stats.stds[j] <= 0.0) {
                stats.stds[j] = 1.0;
                stats.constant_mask[static_cast<std::size_t>(j)] = 1;
            }
        }
    }
    return stats;
}

void apply_stats(Matrix& features, const FeatureStats& stats) {
    if (features.cols() != stats.size()) {
        throw std::invalid_argument("apply_stats: column count mismatch");
    }
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        if (stats.constant_mask[static_cast<std::size_t>(j)]) continue;
        features.col(j) = (features.col(j).array() - stats.means[j]) / stats.stds[j];
    }
}

void invert_stats(Matrix& features, const FeatureStats& stats) {
    if (features.cols() != stats.size()) {
        throw std::invalid_argument("invert_stats: column count mismatch");
    }
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        if (stats.constant_mask[static_cast<std::size_t>(j)]) continue;
        features.col(j) = features.col(j).array() * stats.stds[j] + stats.means[j];
    }
}

StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others) {
    for (const auto& o : others) {
        if (o.feature_names != train.feature_names) {
            throw std::invalid_argument("standardize: feature-name mismatch between datasets");
        }
    }
    StandardizeResult result;
    result.stats = fit_stats(train.features);
    result.train = train;
    apply_stats(result.train.features, result.stats);
    result.others.reserve(others.size());
    for (const auto& o : others) {
        Dataset copy = o;
        apply_stats(copy.features, result.stats);
        result.others.push_back(std::move(copy));
    }
    return result;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) =
            ds.features.row(static_cast<Eigen::Index>(rows[i]));
        out.labels[static_cast<Eigen::Index>(i)] = ds.labels[static_cast<Eigen::Index>(rows[i])];
    }
    out.feature_names = ds.feature_names;
    out.nominal_maps = ds.nominal_maps;
    return out;
}

}  // namespace

SplitResult train_test_split(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                             bool stratified) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("train_test_split: test_fraction must be in (0,1)");
    }
    const auto n = static_cast<std::size_t>(dataset.n_rows());
    std::vector<std::size_t> test_idx, train_idx;

    if (stratified) {
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < n; ++i) {
                if (dataset.labels[static_cast<Eigen::Index>(i)] == cls) rows.push_back(i);
            }
            if (rows.empty()) {
                throw std::invalid_argument(
                    "train_test_split: class " + std::to_string(cls) +
                    " has no rows; stratified split impossible");
            }
            Rng rng(derive_seed(seed, 0x73706c69ULL + static_cast<std::uint64_t>(cls)));
            rng.shuffle(rows);
            const auto take = static_cast<std::size_t>(
                std::llround(test_fraction * static_cast<double>(rows.size())));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                (i < take ? test_idx : train_idx).push_back(rows[i]);
            }
        }
    } else {
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        Rng rng(derive_seed(seed, 0x73706c69ULL));
        rng.shuffle(rows);
        const auto take =
            static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            (i < take ? test_idx : train_idx).push_back(rows[i]);
        }
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    SplitResult result;
    result.train = take_rows(dataset, train_idx);
    result.test = take_rows(dataset, test_idx);
    return result;
}

Dataset synth_generate(int n_normal, int n_malicious, int m, double separation,
                       std::uint64_t seed) {
    if (n_normal <= 0 || n_malicious <= 0) {
        throw std::invalid_argument("synth_generate: class counts must be positive");
    }
    if (m < 1) throw std::invalid_argument("synth_generate: m must be >= 1");

    const Eigen::Index n = n_normal + n_malicious;
    Dataset ds;
    ds.features.resize(n, m + 1);
    ds.labels.resize(n);

    Rng rng(derive_seed(seed, 0x73796e7468ULL));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int label = i < n_normal ? 0 : 1;
        ds.labels[i] = label;
        const double shift = label == 1 ? separation : 0.0;
        for (int j = 0; j < m; ++j) ds.features(i, j) = rng.normal(shift, 1.0);
    }

    // class-correlated nominal column; distributions coincide at separation 0
    static const char* tokens[3] = {"alpha", "beta", "gamma"};
    const double base[3] = {0.5, 0.3, 0.2};
    const double skew[3] = {0.1, 0.2, 0.7};
    const double t = std::min(1.0, std::abs(separation) / 4.0);
    std::vector<std::string> drawn(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double probs[3];
        for (int c = 0; c < 3; ++c) {
            probs[c] = ds.labels[i] == 1 ? (1.0 - t) * base[c] + t * skew[c] : base[c];
        }
        const double u = rng.uniform();
        int pick = u < probs[0] ? 0 : (u < probs[0] + probs[1] ? 1 : 2);
        drawn[static_cast<std::size_t>(i)] = tokens[pick];
    }
    const auto ordered = frequency_order(drawn);
    std::map<std::string, double> code;
    for (std::size_t c = 0; c < ordered.size(); ++c) code[ordered[c]] = static_cast<double>(c);
    for (Eigen::Index i = 0; i < n; ++i) {
        ds.features(i, m) = code[drawn[static_cast<std::size_t>(i)]];
    }

    char buf[16];
    for (int j = 0; j < m; ++j) {
        std::snprintf(buf, sizeof(buf), "f%02d", j);
        ds.feature_names.push_back(buf);
    }
    ds.feature_names.push_back("proto");
    ds.nominal_maps["proto"] = ordered;
    ds.validate();
    return ds;
}

SynthFlows synth_flows(int n_normal, int n_malicious, int n_numeric, double separation,
                       std::uint64_t seed) {
    if (n_normal <= 0 || n_malicious <= 0 || n_numeric < 1) {
        throw std::invalid_argument("synth_flows: counts must be positive");
    }
    SynthFlows out;
    std::string schema_text = "stime timestamp drop\nsrcip ip drop\nsport port keep\n"
                              "dstip ip drop\ndsport port keep\nproto nominal keep\n";
    for (int j = 0; j < n_numeric; ++j) {
        schema_text += "num" + std::to_string(j) + " numeric keep\n";
    }
    schema_text += "attack_cat category drop\nlabel label keep\n";
    out.schema = Schema::parse(schema_text);

    std::vector<std::string> header;
    for (const auto& c : out.schema.columns) header.push_back(c.name);
    out.rows.push_back(header);

    Rng rng(derive_seed(seed, 0x666c6f77ULL));
    const int n = n_normal + n_malicious;
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int i = n_normal; i < n; ++i) labels[static_cast<std::size_t>(i)] = 1;
    rng.shuffle(labels);

    static const char* protos_normal[3] = {"tcp", "udp", "dns"};
    static const char* cats[2] = {"generic", "dos"};
    double ts = 1.0e9;
    for (int i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        ts += rng.uniform(0.0, 0.2);
        std::vector<std::string> row;
        row.push_back(format_double(ts));
        // attacks concentrate on few sources to keep the edge stream bursty
        if (label == 1) {
            row.push_back("10.0.0." + std::to_string(1 + rng.uniform_index(3)));
        } else {
            row.push_back("192.168.1." + std::to_string(1 + rng.uniform_index(200)));
        }
        row.push_back(std::to_string(1024 + rng.uniform_index(60000)));
        row.push_back("172.16.0." + std::to_string(1 + rng.uniform_index(label == 1 ? 2 : 50)));
        row.push_back(label == 1 ? "53" : std::to_string(1 + rng.uniform_index(1023)));
        row.push_back(label == 1 ? (rng.uniform() < 0.8 ? "dns" : "tcp")
                                 : protos_normal[rng.uniform_index(3)]);
        for (int j = 0; j < n_numeric; ++j) {
            const double scale = label == 1 ? 1.0 + separation * 0.5 : 1.0;
            row.push_back(format_double(scale * std::exp(rng.normal(0.0, 0.5))));
        }
        row.push_back(label == 1 ? cats[rng.uniform_index(2)] : "");
        row.push_back(std::to_string(label));
        out.rows.push_back(std::move(row));
    }
    return out;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::vector<std::string> header = ds.feature_names;
    header.push_back("label");
    out << csv::join_line(header) << '\n';
    std::vector<std::string> row(header.size());
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.n_cols(); ++j) {
            row[static_cast<std::size_t>(j)] = format_double(ds.features(i, j));
        }
        row.back() = std::to_string(ds.labels[i]);
        out << csv::join_line(row) << '\n';
    }
}

Dataset load_dataset_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw std::runtime_error("empty dataset csv: " + path);
    const auto& header = rows.front();
    if (header.empty() || header.back() != "label") {
        throw std::runtime_error("dataset csv must end with a 'label' column: " + path);
    }
    const std::size_t m = header.size() - 1;
    Dataset ds;
    ds.feature_names.assign(header.begin(), header.end() - 1);
    ds.features.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(m));
    ds.labels.resize(static_cast<Eigen::Index>(rows.size() - 1));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw std::runtime_error("row " + std::to_string(r) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " +
                                     std::to_string(rows[r].size()));
        }
        for (std::size_t j = 0; j < m; ++j) {
            double v;
            if (!parse_double(rows[r][j], v)) {
                throw std::runtime_error("row " + std::to_string(r) + ": bad numeric '" +
                                         rows[r][j] + "'");
            }
            ds.features(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = v;
        }
        std::int64_t lab;
        if (!parse_int64(rows[r].back(), lab) || (lab != 0 && lab != 1)) {
            throw std::runtime_error("row " + std::to_string(r) + ": bad label '" +
                                     rows[r].back() + "'");
        }
        ds.labels[static_cast<Eigen::Index>(r - 1)] = static_cast<int>(lab);
    }
    return ds;
}

json stats_to_json(const FeatureStats& stats) {
    json j;
    j["means"] = std::vector<double>(stats.means.data(), stats.means.data() + stats.means.size());
    j["stds"] = std::vector<double>(stats.stds.data(), stats.stds.data() + stats.stds.size());
    j["constant_mask"] = stats.constant_mask;
    return j;
}

FeatureStats stats_from_json(const json& j) {
    FeatureStats stats;
    const auto means = j.at("means").get<std::vector<double>>();
    const auto stds = j.at("stds").get<std::vector<double>>();
    stats.means = Eigen::Map<const VecD>(means.data(), static_cast<Eigen::Index>(means.size()));
    stats.stds = Eigen::Map<const VecD>(stds.data(), static_cast<Eigen::Index>(stds.size()));
    stats.constant_mask = j.at("constant_mask").get<std::vector<std::uint8_t>>();
    return stats;
}

json dataset_sidecar(const Dataset& ds, const FeatureStats* stats, const SelectionReport* report) {
    json j;
    j["schema_version"] = 1;
    j["feature_names"] = ds.feature_names;
    j["nominal_maps"] = ds.nominal_maps;
    if (stats) j["stats"] = stats_to_json(*stats);
    if (report) j["selection"] = report->to_json();
    return j;
}

void apply_sidecar(Dataset& ds, const json& sidecar, FeatureStats* stats) {
    const auto names = sidecar.at("feature_names").get<std::vector<std::string>>();
    if (names != ds.feature_names) {
        throw std::runtime_error("sidecar feature names do not match dataset csv");
    }
    ds.nominal_maps =
        sidecar.at("nominal_maps").get<std::map<std::string, std::vector<std::string>>>();
    if (stats && sidecar.contains("stats")) *stats = stats_from_json(sidecar.at("stats"));
}

}  // namespace netanom::data
