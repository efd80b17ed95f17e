#pragma once

#include "netanom/dataset.hpp"
#include "netanom/rng.hpp"
#include "netanom/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace netanom::midas {

struct EdgeEvent {
    std::string u;
    std::string v;
    std::int64_t t = 1;  // tick, >= 1, non-decreasing within a stream
};

// Fixed-size counter array with one-sided error: estimates never undershoot
// the true count. Hashing mixes the (u,v) pair as length-prefixed bytes under
// per-row seeds, so layouts reproduce across runs and platforms.
class CountMinSketch {
public:
    explicit CountMinSketch(int depth = 2, int width = 1024, std::uint64_t seed = 1);

    void update(const std::string& u, const std::string& v, double amount = 1.0);
    double query(const std::string& u, const std::string& v) const;
    void clear();

    int depth() const { return depth_; }
    int width() const { return width_; }

private:
    std::size_t cell(int row, const std::string& u, const std::string& v) const;

    int depth_;
    int width_;
    std::vector<std::uint64_t> row_seeds_;
    std::vector<double> counters_;  // depth_ * width_
};

// Exact hash-map counter with the CountMinSketch interface; the oracle the
// sketch is tested against, and the backend for exact scores in tests.
class ExactCounter {
public:
    void update(const std::string& u, const std::string& v, double amount = 1.0);
    double query(const std::string& u, const std::string& v) const;
    void clear() { counts_.clear(); }

private:
    std::map<std::pair<std::string, std::string>, double> counts_;
};

// Streaming chi-squared scorer over edge arrivals. `total` accumulates all
// time, `current` resets whenever the tick advances. Templated on the counter
// backend so the exact counter can stand in for the sketch.
template <class Counter>
class MidasCore {
public:
    MidasCore(Counter total, Counter current)
        : total_(std::move(total)), current_(std::move(current)) {}

    // score = (a - s/t)^2 * t^2 / (s * (t - 1)) with a = current count,
    // s = all-time count; 0 at t = 1 or s = 0 (no history, no evidence)
    double score_event(const EdgeEvent& e) {
        if (e.t < 1) throw std::invalid_argument("midas: tick must be >= 1");
        if (e.t < current_tick_)
            throw std::invalid_argument("midas: events out of order (tick decreased)");
        if (e.t > current_tick_) {
            current_.clear();
            current_tick_ = e.t;
        }
        total_.update(e.u, e.v);
        current_.update(e.u, e.v);
        const double a = current_.query(e.u, e.v);
        const double s = total_.query(e.u, e.v);
        const double t = static_cast<double>(e.t);
        if (e.t == 1 || s == 0.0) return 0.0;
        const double d = a - s / t;
        return d * d * t * t / (s * (t - 1.0));
    }

    std::int64_t current_tick() const { return current_tick_; }

private:
    Counter total_;
    Counter current_;
    std::int64_t current_tick_ = 0;
};

using MidasDetector = MidasCore<CountMinSketch>;

struct MidasParams {
    int depth = 2;
    int width = 1024;
    std::uint64_t seed = 1;
};

struct ScoredEvent {
    EdgeEvent event;
    double score = 0.0;
};

// One pass, one score per event; memory stays at 2 * depth * width counters.
std::vector<ScoredEvent> process_stream(const std::vector<EdgeEvent>& events,
                                        const MidasParams& params);

// t = 1 + floor((timestamp - min timestamp) / tick_seconds); output sorted by
// tick. Node ids are the IP strings.
std::vector<EdgeEvent> flows_to_edges(const std::vector<data::FlowRecord>& records,
                                      double tick_seconds);

struct EdgeStreamConfig {
    std::int64_t ticks = 200;
    double background_rate = 50.0;  // Poisson mean events per tick
    int n_nodes = 30;
    int n_bursts = 5;
    std::int64_t burst_size = 300;  // events injected at each burst tick
    std::uint64_t seed = 1;
};

// Poisson background over a fixed node pool plus injected single-pair bursts;
// labels mark the burst events.
struct SynthStream {
    std::vector<EdgeEvent> events;
    VecI labels;
};
SynthStream synth_edge_stream(const EdgeStreamConfig& config);

// edge csv: header "u,v,t"
std::vector<EdgeEvent> load_edge_csv(const std::string& path);
void save_edge_csv(const std::vector<EdgeEvent>& events, const std::string& path);
void save_scores_csv(const std::vector<ScoredEvent>& scored, const std::string& path);

}  // namespace netanom::midas
