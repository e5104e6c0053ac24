#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace aspectsum {

// FNV-1a, used for cache keys and artifact checksums (not security).
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// splitmix64 step; turns an arbitrary 64-bit key into a well-mixed value.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Reads a text file as a list of lines (without trailing '\n'; a final
// unterminated line counts).
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view s, char sep);
std::string lower(std::string_view s);
std::string trim(std::string_view s);

// Number of whitespace-delimited tokens. This is the portable token count
// used for summary length caps, independent of any model tokenizer.
std::size_t count_ws_tokens(std::string_view text);

// Keeps at most max_tokens whitespace-delimited tokens, cutting at a token
// boundary. Returns the (possibly shorter) prefix.
std::string truncate_ws_tokens(std::string_view text, std::size_t max_tokens);

// Formats a double with enough digits to round-trip prediction files
// (>= 6 significant digits per the CSV contract).
std::string format_probability(double p);

// Runs job(i) for i in [0, n) on up to `workers` threads; inline when the
// pool would have one worker. The job owns its error handling — exceptions
// must not escape it.
void parallel_for_indexed(std::size_t n, std::size_t workers,
                          const std::function<void(std::size_t)>& job);

}  // namespace aspectsum
