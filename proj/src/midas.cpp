#include "netanom/midas.hpp"

#include "netanom/csv.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace netanom::midas {

namespace {

constexpr std::uint64_t kStreamTag = 0x6d646173;  // edge-synth stream id

// length-prefixed little-endian words of (u, v) folded through mix64
std::uint64_t hash_pair(std::uint64_t seed, const std::string& u, const std::string& v) {
    std::uint64_t h = seed;
    auto feed = [&h](const std::string& s) {
        h = mix64(h ^ static_cast<std::uint64_t>(s.size()));
        for (std::size_t off = 0; off < s.size(); off += 8) {
            std::uint64_t word = 0;
            std::size_t take = std::min<std::size_t>(8, s.size() - off);
            std::memcpy(&word, s.data() + off, take);
            h = mix64(h ^ word);
        }
    };
    feed(u);
    feed(v);
    return h;
}

}  // namespace

CountMinSketch::CountMinSketch(int depth, int width, std::uint64_t seed)
    : depth_(depth), width_(width) {
    if (depth < 1) throw std::invalid_argument("cms: depth must be >= 1");
    if (width < 1) throw std::invalid_argument("cms: width must be >= 1");
    row_seeds_.resize(static_cast<std::size_t>(depth));
    for (int r = 0; r < depth; ++r)
        row_seeds_[static_cast<std::size_t>(r)] = derive_seed(seed, static_cast<std::uint64_t>(r));
    counters_.assign(static_cast<std::size_t>(depth) * static_cast<std::size_t>(width), 0.0);
}

std::size_t CountMinSketch::cell(int row, const std::string& u, const std::string& v) const {
    std::uint64_t h = hash_pair(row_seeds_[static_cast<std::size_t>(row)], u, v);
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(h % static_cast<std::uint64_t>(width_));
}

void CountMinSketch::update(const std::string& u, const std::string& v, double amount) {
    if (amount < 0.0) throw std::invalid_argument("cms: negative update amount");
    for (int r = 0; r < depth_; ++r) counters_[cell(r, u, v)] += amount;
}

double CountMinSketch::query(const std::string& u, const std::string& v) const {
    double est = counters_[cell(0, u, v)];
    for (int r = 1; r < depth_; ++r) est = std::min(est, counters_[cell(r, u, v)]);
    return est;
}

void CountMinSketch::clear() { std::fill(counters_.begin(), counters_.end(), 0.0); }

void ExactCounter::update(const std::string& u, const std::string& v, double amount) {
    if (amount < 0.0) throw std::invalid_argument("exact counter: negative update amount");
    counts_[{u, v}] += amount;
}

double ExactCounter::query(const std::string& u, const std::string& v) const {
    auto it = counts_.find({u, v});
    return it == counts_.end() ? 0.0 : it->second;
}

std::vector<ScoredEvent> process_stream(const std::vector<EdgeEvent>& events,
                                        const MidasParams& params) {
    MidasDetector detector(CountMinSketch(params.depth, params.width, params.seed),
                           CountMinSketch(params.depth, params.width, params.seed));
    std::vector<ScoredEvent> out;
    out.reserve(events.size());
    for (const EdgeEvent& e : events) out.push_back({e, detector.score_event(e)});
    return out;
}

std::vector<EdgeEvent> flows_to_edges(const std::vector<data::FlowRecord>& records,
                                      double tick_seconds) {
    if (!(tick_seconds > 0.0)) throw std::invalid_argument("flows_to_edges: tick must be > 0");
    std::vector<EdgeEvent> edges;
    if (records.empty()) return edges;
    double min_ts = records[0].timestamp;
    for (const auto& r : records) min_ts = std::min(min_ts, r.timestamp);
    edges.reserve(records.size());
    for (const auto& r : records) {
        EdgeEvent e;
        e.u = r.src_ip;
        e.v = r.dst_ip;
        e.t = 1 + static_cast<std::int64_t>(std::floor((r.timestamp - min_ts) / tick_seconds));
        edges.push_back(std::move(e));
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const EdgeEvent& a, const EdgeEvent& b) { return a.t < b.t; });
    return edges;
}

SynthStream synth_edge_stream(const EdgeStreamConfig& config) {
    if (config.ticks < 1) throw std::invalid_argument("edge stream: ticks must be >= 1");
    if (config.n_nodes < 2) throw std::invalid_argument("edge stream: need >= 2 nodes");
    if (config.n_bursts < 0 || config.n_bursts > config.ticks)
        throw std::invalid_argument("edge stream: bad burst count");
    Rng rng(derive_seed(config.seed, kStreamTag));

    // burst ticks drawn from the later three quarters so history exists
    std::vector<std::int64_t> burst_ticks;
    if (config.n_bursts > 0) {
        std::int64_t lo = std::max<std::int64_t>(2, config.ticks / 4);
        std::size_t span = static_cast<std::size_t>(config.ticks - lo + 1);
        auto picked = rng.sample_without_replacement(
            span, std::min<std::size_t>(static_cast<std::size_t>(config.n_bursts), span));
        for (std::size_t p : picked) burst_ticks.push_back(lo + static_cast<std::int64_t>(p));
        std::sort(burst_ticks.begin(), burst_ticks.end());
    }

    auto node = [](std::uint64_t i) { return "h" + std::to_string(i); };

    SynthStream out;
    std::vector<int> labels;
    std::size_t next_burst = 0;
    for (std::int64_t t = 1; t <= config.ticks; ++t) {
        int k = rng.poisson(config.background_rate);
        for (int i = 0; i < k; ++i) {
            std::uint64_t a = rng.uniform_index(static_cast<std::uint64_t>(config.n_nodes));
            std::uint64_t b = rng.uniform_index(static_cast<std::uint64_t>(config.n_nodes));
            out.events.push_back({node(a), node(b), t});
            labels.push_back(0);
        }
        if (next_burst < burst_ticks.size() && burst_ticks[next_burst] == t) {
            std::uint64_t a = rng.uniform_index(static_cast<std::uint64_t>(config.n_nodes));
            std::uint64_t b = rng.uniform_index(static_cast<std::uint64_t>(config.n_nodes));
            for (std::int64_t i = 0; i < config.burst_size; ++i) {
                out.events.push_back({node(a), node(b), t});
                labels.push_back(1);
            }
            ++next_burst;
        }
    }
    out.labels.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.labels[static_cast<Eigen::Index>(i)] = labels[i];
    return out;
}

std::vector<EdgeEvent> load_edge_csv(const std::string& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw std::runtime_error(path + ": empty edge file");
    if (rows[0] != std::vector<std::string>{"u", "v", "t"})
        throw std::runtime_error(path + ": expected header u,v,t");
    std::vector<EdgeEvent> events;
    events.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3)
            throw std::runtime_error(path + ": row " + std::to_string(i) + ": expected 3 fields");
        std::int64_t t = 0;
        if (!parse_int64(rows[i][2], t) || t < 1)
            throw std::runtime_error(path + ": row " + std::to_string(i) + ": bad tick '" +
                                     rows[i][2] + "'");
        events.push_back({rows[i][0], rows[i][1], t});
    }
    return events;
}

void save_edge_csv(const std::vector<EdgeEvent>& events, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(events.size() + 1);
    rows.push_back({"u", "v", "t"});
    for (const EdgeEvent& e : events) rows.push_back({e.u, e.v, std::to_string(e.t)});
    csv::write_file(path, rows);
}

void save_scores_csv(const std::vector<ScoredEvent>& scored, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(scored.size() + 1);
    rows.push_back({"u", "v", "t", "score"});
    for (const ScoredEvent& s : scored)
        rows.push_back(
            {s.event.u, s.event.v, std::to_string(s.event.t), format_double(s.score)});
    csv::write_file(path, rows);
}

}  // namespace netanom::midas
