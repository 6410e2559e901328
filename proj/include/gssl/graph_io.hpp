#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "gssl/graph.hpp"

namespace gssl {

namespace fs = std::filesystem;

/// Reads a `head\trelation\ttail[\tsentence_id]` file. Lines starting with
/// `#` and blank lines are skipped. With `normalize`, labels are lowercased
/// and whitespace-collapsed before interning.
KnowledgeGraph load_triples(const fs::path& path, bool normalize = false);
void save_triples(const KnowledgeGraph& g, const fs::path& path,
                  const std::vector<std::string>& header = {});

/// Raw contents of an NTDF feature file: magic "NTDF", u32 version (1),
/// u64 rows, u32 dim, then little-endian f32 rows.
FeatureMatrix read_feature_file(const fs::path& path);
void write_feature_file(const FeatureMatrix& m, const fs::path& path);

/// Index file: `row_index\tlabel`. Returns label -> row.
std::unordered_map<std::string, std::size_t> read_index_file(const fs::path& path,
                                                             bool normalize = false);
void write_index_file(const std::vector<std::string>& labels, const fs::path& path);

/// Rows permuted into NodeId order. Every node must have a row.
FeatureMatrix load_features(const fs::path& features, const fs::path& index,
                            const KnowledgeGraph& g, bool normalize = false);
/// Same, keyed on relation labels.
FeatureMatrix load_relation_features(const fs::path& features, const fs::path& index,
                                     const KnowledgeGraph& g, bool normalize = false);
/// Writes node features plus a matching index in NodeId order.
void save_features(const KnowledgeGraph& g, const fs::path& features, const fs::path& index);

/// `label\trole`. Unknown roles are errors; a label missing from the graph
/// declares an isolated node. Saving lists every designated node plus
/// isolated `other` nodes.
void load_roles(const fs::path& path, KnowledgeGraph& g, bool normalize = false);
void save_roles(const KnowledgeGraph& g, const fs::path& path);

struct GoldStandard {
  std::map<NodeId, NodeId> type_of;       // target -> type node
  std::map<NodeId, std::size_t> support;  // type node -> count
};

/// `term_label\ttype_label`. When the graph has no role designations yet,
/// gold terms become targets and gold types become type nodes.
GoldStandard load_gold(const fs::path& path, KnowledgeGraph& g, bool normalize = false);
void save_gold(const KnowledgeGraph& g, const GoldStandard& gold, const fs::path& path);

/// JSONL objects `{"id": ..., "text": ...}`.
std::unordered_map<std::string, std::string> load_sentences(const fs::path& path);

}  // namespace gssl
