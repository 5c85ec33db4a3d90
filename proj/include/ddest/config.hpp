// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddest/eval.hpp"

namespace ddest {

/// Flat string key-value configuration.
///
/// File format: one `key = value` per line, `#` comments and blank lines
/// ignored. Every key must be one of the known defaults; unknown keys and
/// malformed lines are reported with their line number. The canonical
/// text (keys sorted, one per line) defines the configuration hash echoed
/// into every output file.
class KeyValues {
 public:
  /// Full default configuration.
  static KeyValues defaults();

  void load_file(const std::filesystem::path& path);

  /// Applies one `key=value` override (the --set form).
  void apply_assignment(const std::string& assignment);

  /// Sets a known key. Throws ValidationError on unknown keys, with the
  /// nearest known keys listed.
  void set(const std::string& key, const std::string& value);

  const std::string& raw(const std::string& key) const;

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  /// Sorted `key = value` lines.
  std::string canonical_text() const;

  /// FNV-1a hash of the canonical text, as fixed-width hex.
  std::string hash_hex() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Number of frames the synth command generates.
struct SynthParams {
  int frames = 10;
};

/// Fully typed run configuration bound from a KeyValues set.
struct RunConfig {
  RadarGrid grid;
  Scene scene;
  CfarConfig cfar;
  MleConfig mle;
  CfarPipelineOptions pipeline;
  MatchBoundary boundary;
  SweepConfig sweep;  ///< scene/grid/cfar/mle/... duplicated inside
  SynthParams synth;
  std::uint64_t seed = 1;

  /// Binds and validates every module configuration. Throws
  /// ValidationError naming the offending key.
  static RunConfig from(const KeyValues& kv);
};

}  // namespace ddest
