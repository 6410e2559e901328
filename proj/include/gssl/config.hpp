#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gssl/experiment.hpp"
#include "gssl/refine.hpp"
#include "gssl/synth.hpp"
#include "gssl/validator.hpp"

namespace gssl {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// File set describing one graph variant on disk.
struct GraphPaths {
  std::string name;
  std::filesystem::path triples;
  std::filesystem::path features;
  std::filesystem::path index;
  std::filesystem::path gold;
  std::filesystem::path roles;
  std::filesystem::path sentences;
  std::filesystem::path relation_features;
  std::filesystem::path relation_index;
  bool normalize = false;
};

enum class RefineMode { enrich, clean, combined };
std::optional<RefineMode> parse_refine_mode(std::string_view s);

struct RefinementConfig {
  RefineMode mode = RefineMode::enrich;
  ValidatorSpec validator;
  std::filesystem::path supplementary_features;
  std::filesystem::path supplementary_index;
  bool zero_init = false;
};

struct RunConfig {
  std::vector<GraphPaths> graphs;
  std::optional<RefinementConfig> refinement;
  std::vector<ModelConfig> models;
  TrainingConfig training;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::filesystem::path output = "out";
  std::string source_text;  // canonical JSON the provenance hash is taken from
};

/// Parses and validates a run configuration. Every violation found is
/// reported together in one ConfigError, one per line. Relative paths are
/// resolved against `base_dir`.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Problems with a parsed config (missing files, empty seeds, ...); empty when valid.
std::vector<std::string> check_run_config(const RunConfig& cfg);

/// Loads triples, roles, features, gold and optional relation features.
Dataset load_dataset(const GraphPaths& paths);

/// Synthetic generator settings from JSON; absent keys keep their defaults.
SyntheticSpec parse_synthetic_spec(const std::string& json_text);

/// "gsslbench <version>", "config <hash>", "seeds <s1,s2,...>".
std::vector<std::string> provenance_header(const RunConfig& cfg);
std::vector<std::string> provenance_header(const std::string& config_text,
                                           const std::vector<std::uint64_t>& seeds);

}  // namespace gssl
