#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace netanom {

// shortest decimal form that round-trips the exact double
std::string format_double(double v);

// strict double parse of an entire token; returns false on trailing junk
bool parse_double(const std::string& s, double& out);

bool parse_int64(const std::string& s, std::int64_t& out);

// fnv-1a 64 over bytes, hex string; used to fingerprint config snapshots
std::string fnv1a_hex(const std::string& data);

// "model name, N cores" from /proc/cpuinfo, best effort
std::string hardware_descriptor();

// Runs fn(i) for i in [0, n). Work items must be independent and write only
// to their own slots; output is then identical for any thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

std::string lower(std::string s);
std::string trim(const std::string& s);

}  // namespace netanom
