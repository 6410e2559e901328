#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gssl/graph.hpp"

namespace gssl {

/// A triple in surface form together with the sentence it was extracted from.
struct TripleText {
  std::string head;
  std::string relation;
  std::string tail;
  std::string sentence;
};

struct Verdict {
  TripleText triple;
  int value = 1;  // 1: supported by the context, 0: noisy
};

/// Binary decision function over triples given their source sentence.
class Validator {
 public:
  virtual ~Validator() = default;
  /// One verdict in {0,1} per input, positionally aligned.
  virtual std::vector<int> validate(std::span<const TripleText> batch) = 0;
  virtual std::string tag() const = 0;
};

Verdict validate(const TripleText& triple, Validator& validator);

/// Verdicts read from `head\trelation\ttail\t{0|1}`.
class VerdictFileValidator final : public Validator {
 public:
  /// In strict mode a triple missing from the file is an error; otherwise it
  /// is accepted (verdict 1).
  VerdictFileValidator(const std::filesystem::path& path, bool strict, bool normalize = false);

  std::vector<int> validate(std::span<const TripleText> batch) override;
  std::string tag() const override { return "verdict-file"; }
  std::size_t size() const { return verdicts_.size(); }

 private:
  std::map<std::tuple<std::string, std::string, std::string>, int> verdicts_;
  bool strict_;
  bool normalize_;
};

/// Relation schema used by the heuristic validator: endpoint type labels a
/// relation admits.
struct RelationSchema {
  std::map<std::string, std::string> type_of;  // entity label -> type label
  std::map<std::string, std::pair<std::string, std::string>> domain_range;
};

/// Offline stand-in for an LLM judge. Rejects self-relations, triples touching
/// a generic stoplist term, and (when a schema is set) triples whose endpoint
/// types violate the relation's declared domain or range.
class HeuristicValidator final : public Validator {
 public:
  static std::set<std::string> default_stoplist();

  explicit HeuristicValidator(std::set<std::string> stoplist = default_stoplist(),
                              std::optional<RelationSchema> schema = std::nullopt);
  static std::set<std::string> read_stoplist(const std::filesystem::path& path);

  std::vector<int> validate(std::span<const TripleText> batch) override;
  std::string tag() const override { return "heuristic-mock"; }

 private:
  int judge(const TripleText& t) const;

  std::set<std::string> stoplist_;
  std::optional<RelationSchema> schema_;
};

class ConstantValidator final : public Validator {
 public:
  explicit ConstantValidator(int value) : value_(value) {}
  std::vector<int> validate(std::span<const TripleText> batch) override {
    return std::vector<int>(batch.size(), value_);
  }
  std::string tag() const override { return value_ ? "accept-all" : "reject-all"; }

 private:
  int value_;
};

struct RemoteOptions {
  std::string endpoint;  // e.g. http://127.0.0.1:8080 ; requests go to <endpoint>/validate
  int timeout_ms = 30000;
  std::size_t batch_size = 32;
  int retries = 3;
  int backoff_ms = 200;  // doubled after each failed attempt
  std::size_t max_in_flight = 4;
};

/// Client for the HTTP validation protocol:
///   POST /validate  {"triples":[{"head","relation","tail","sentence"}...]}
///   -> {"verdicts":[0|1,...]}
/// Non-200 responses and transport failures are retried; exhausting the
/// retries raises ServiceError.
class RemoteValidator final : public Validator {
 public:
  explicit RemoteValidator(RemoteOptions opts);

  std::vector<int> validate(std::span<const TripleText> batch) override;
  std::string tag() const override { return "remote-service"; }

  static std::string encode_request(std::span<const TripleText> batch);
  /// Throws ServiceError on a malformed body or a length mismatch.
  static std::vector<int> decode_response(const std::string& body, std::size_t expected);

 private:
  std::vector<int> post_batch(std::span<const TripleText> batch) const;

  RemoteOptions opts_;
  std::string scheme_host_port_;
  std::string base_path_;
};

enum class ValidatorKind { verdict_file, heuristic_mock, remote_service, accept_all, reject_all };

struct ValidatorSpec {
  ValidatorKind kind = ValidatorKind::heuristic_mock;
  std::filesystem::path verdict_file;
  bool strict = false;
  std::filesystem::path stoplist;
  RemoteOptions remote;
};

std::unique_ptr<Validator> make_validator(const ValidatorSpec& spec, bool normalize = false);
std::optional<ValidatorKind> parse_validator_kind(std::string_view s);

}  // namespace gssl
