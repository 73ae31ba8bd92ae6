#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scenerouter {

// Pairwise (cascade) summation; the reduction tree depends only on the
// length of the input, so results are reproducible across runs.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// Index of the smallest element; ties resolve to the lowest index.
std::size_t argmin(std::span<const double> values);
// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

double squared_distance(std::span<const double> a, std::span<const double> b);

// Shortest decimal form that round-trips a double ("%.17g").
std::string format_double(double value);

std::string hex64(std::uint64_t value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
std::uint64_t hash_file(const std::filesystem::path& path);

std::vector<std::string> split_whitespace(std::string_view line);
std::vector<std::string> split(std::string_view line, char delimiter);
std::string_view trim(std::string_view text);

// Strict numeric parsing; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

// Runs body(i) for i in [0, count) across up to `threads` workers. Each
// index is processed exactly once; callers write to per-index slots so the
// result does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

std::size_t default_thread_count();

}  // namespace scenerouter
