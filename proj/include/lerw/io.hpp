#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lerw/path.hpp"

namespace lerw {

inline constexpr const char* kToolkitVersion = "lerw3d 1.0.0";

// Binary path format: magic "L3DP", version byte 0x01, scale byte, start
// point (3 x 64-bit little-endian signed), step count (64-bit little-endian
// unsigned), then one byte per step with codes 0..5 in the fixed direction
// order.  decode(encode(p)) == p and encode(decode(b)) == b; decode errors
// (bad magic, truncation, step code >= 6, trailing bytes) name the offending
// byte offset.
std::vector<uint8_t> encode_path(const LatticePath& path);
LatticePath decode_path(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> read_bytes(const std::string& file);
void write_bytes(const std::string& file, const std::vector<uint8_t>& bytes);

// Flat "key = value" configuration with '#' comments and blank lines.
// Whitespace around keys and values is trimmed; later lines override earlier
// ones.  Errors name the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config(const std::string& file);

// One batch invocation: a subcommand plus its full parameter map.  Running
// the same manifest with the same seed produces byte-identical result lines
// regardless of the worker count, so `workers` and the output path are
// deliberately not echoed into the output itself.
struct ExperimentManifest {
    std::string subcommand;
    std::map<std::string, std::string> params;  // flat, canonically ordered
    uint64_t seed = 1;
    int workers = 1;
    std::string version = kToolkitVersion;
    std::string input_path;   // optional auxiliary input
    std::string output_path;  // empty = stdout
    std::string format = "jsonl";  // jsonl | csv
};

// The header line echoed at the top of every result file.
std::string manifest_json(const ExperimentManifest& man);

// FNV-1a hash of the canonical parameter map, as 16 hex digits; stamped on
// every result record so a line can be re-derived in isolation.
std::string param_digest(const ExperimentManifest& man);

// Validates the manifest against the subcommand's schema, runs the mapped
// library operation, and writes the header plus one record per line.
// Returns the process exit code: 0 success, 1 validation error, 2 runtime
// error, 3 statistically undecided (events subcommand only).  The stream
// overload is the library entry used by the determinism checks; the other
// writes to output_path (stdout when empty).
int run_manifest(const ExperimentManifest& man, std::ostream& out);
int run_manifest(const ExperimentManifest& man);

} // namespace lerw
