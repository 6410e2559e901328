#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/validator.hpp"

namespace gssl {

inline constexpr std::string_view kIsA = "is-a";

/// A triple in label space. Refinement logs use labels because node handles
/// are reassigned between graph versions.
struct LabelTriple {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const LabelTriple&) const = default;
  auto operator<=>(const LabelTriple&) const = default;
};

// Morphological is-a rules for multi-word terms. Output labels are normalized
// (lowercase, single-spaced); tokens are whitespace-separated.

/// "a b c" -> (b c, is-a, c), (a b c, is-a, b c). Single tokens yield nothing.
/// Throws std::invalid_argument on an empty term.
std::vector<LabelTriple> derive_isa_without_of(std::string_view term);

/// Splits at the first "of": (term, is-a, head) plus the without-of chain of
/// a multi-token head. The remainder after "of" is not expanded. A term that
/// starts or ends with "of" yields nothing and logs a warning.
std::vector<LabelTriple> derive_isa_with_of(std::string_view term);

/// Dispatches on whether the term contains the token "of".
std::vector<LabelTriple> derive_isa(std::string_view term);

struct LoggedTriple {
  LabelTriple triple;
  std::string tag;  // rule name for additions, validator tag for removals
  std::optional<int> verdict;
};

struct RefinementLog {
  std::vector<LoggedTriple> added;
  std::vector<LoggedTriple> removed;
  std::optional<TopologyStats> stats_before;
  std::optional<TopologyStats> stats_after;

  void append(const RefinementLog& later);
};

struct Refined {
  KnowledgeGraph graph;
  RefinementLog log;
};

/// Supplies feature rows for nodes created by enrichment.
class FeatureProvider {
 public:
  FeatureProvider() = default;
  /// Rows from a supplementary NTDF file + index, keyed by normalized label.
  static FeatureProvider from_files(const std::filesystem::path& features,
                                    const std::filesystem::path& index);

  void set_zero_init(bool z) { zero_init_ = z; }
  bool zero_init() const { return zero_init_; }
  void add(const std::string& label, std::vector<float> row);

  /// Throws InputError when no row exists and zero-init is off.
  std::vector<float> row_for(const std::string& label, std::size_t dim) const;

 private:
  std::unordered_map<std::string, std::vector<float>> rows_;
  bool zero_init_ = false;
};

/// Applies the is-a rules to every non-type node. New nodes get role `other`.
/// Features are extended through `provider` when the graph carries features.
Refined enrich(const KnowledgeGraph& g, const FeatureProvider& provider = {});

/// Thrown when validation fails mid-way; carries the log accumulated so far.
class CleanAborted : public std::runtime_error {
 public:
  CleanAborted(const std::string& what, RefinementLog partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RefinementLog& partial_log() const { return partial_; }

 private:
  RefinementLog partial_;
};

/// Removes edges with verdict 0, then drops `other` nodes left edge-free by
/// the removal. The relation vocabulary is kept unchanged.
Refined clean(const KnowledgeGraph& g, Validator& validator,
              const std::unordered_map<std::string, std::string>& sentences = {});

/// Enrichment followed by cleaning, so added triples are validated too.
Refined combined_refine(const KnowledgeGraph& g, Validator& validator,
                        const FeatureProvider& provider = {},
                        const std::unordered_map<std::string, std::string>& sentences = {});

/// Emits one JSON object per line: {"action":"added"|"removed", ...}.
void write_log_jsonl(const RefinementLog& log, const std::filesystem::path& path,
                     const std::vector<std::string>& header = {});

}  // namespace gssl
