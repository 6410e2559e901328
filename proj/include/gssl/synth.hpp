#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/graph_io.hpp"

namespace gssl {

struct SchemaRelation {
  std::string name;
  std::size_t domain = 0;  // type index
  std::size_t range = 0;
};

struct Corruption {
  double edge_drop_frac = 0.5;
  double spurious_frac = 0.1;  // of the clean edge count, schema-violating
  double fragment_frac = 0.0;  // terms stripped of every edge
  double feature_noise_sigma = 0.0;
};

struct SyntheticSpec {
  std::size_t n_types = 8;
  std::size_t terms_per_type = 50;
  std::size_t n_relations = 6;          // used when `relations` is empty
  std::vector<SchemaRelation> relations;
  double edges_per_relation_term = 2.0;  // clean edges per relation = this * terms_per_type
  double type_link_frac = 0.0;           // terms linked to their type node
  bool types_in_schema = true;           // type nodes take part in schema edges like their terms
  std::size_t feature_dim = 32;
  double term_noise_sigma = 3.0;         // per-term deviation from the type centroid
  Corruption corruption;
  std::uint64_t seed = 0;
};

/// Relation k links type (2k mod T) to type (2k+1 mod T), wrapping with an
/// offset once all pairs are used.
std::vector<SchemaRelation> default_schema(std::size_t n_types, std::size_t n_relations);

inline constexpr std::string_view kTypeLink = "has-type";

struct SyntheticPair {
  KnowledgeGraph clean;
  KnowledgeGraph corrupted;
  GoldStandard gold;  // identical node ids in both graphs
  std::vector<SchemaRelation> schema;
  std::vector<std::size_t> type_of_node;  // type index per node
};

/// Throws ConfigError on an invalid spec or a density the schema cannot
/// hold without duplicate edges.
SyntheticPair generate_synthetic(const SyntheticSpec& spec);

/// Fraction of schema-relation edges whose endpoint types match the schema.
double schema_consistency(const KnowledgeGraph& g, const std::vector<SchemaRelation>& schema,
                          const std::vector<std::size_t>& type_of_node);

/// `<dir>/{clean,corrupted}/` each with triples.tsv, features.ntdf,
/// index.tsv, roles.tsv, gold.tsv; plus `<dir>/schema.tsv`.
void write_synthetic(const SyntheticPair& pair, const std::filesystem::path& dir,
                     const std::vector<std::string>& header = {});

}  // namespace gssl
