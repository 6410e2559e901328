#include "gssl/validator.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gssl/error.hpp"
#include "gssl/log.hpp"
#include "gssl/text.hpp"

namespace gssl {

Verdict validate(const TripleText& triple, Validator& validator) {
  auto v = validator.validate(std::span<const TripleText>(&triple, 1));
  if (v.size() != 1) throw ServiceError(validator.tag() + ": expected one verdict");
  return Verdict{triple, v[0]};
}

VerdictFileValidator::VerdictFileValidator(const std::filesystem::path& path, bool strict,
                                           bool normalize)
    : strict_(strict), normalize_(normalize) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open verdict file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cols = text::split(line, '\t');
    if (cols.size() < 4) throw ParseError(path.string(), lineno, "expected 4 columns");
    auto v = text::trim(cols[3]);
    if (v != "0" && v != "1") throw ParseError(path.string(), lineno, "verdict must be 0 or 1");
    auto key = normalize ? std::make_tuple(text::normalize_label(cols[0]),
                                           text::normalize_label(cols[1]),
                                           text::normalize_label(cols[2]))
                         : std::make_tuple(cols[0], cols[1], cols[2]);
    verdicts_[key] = v == "1" ? 1 : 0;
  }
}

std::vector<int> VerdictFileValidator::validate(std::span<const TripleText> batch) {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const auto& t : batch) {
    auto key = normalize_ ? std::make_tuple(text::normalize_label(t.head),
                                            text::normalize_label(t.relation),
                                            text::normalize_label(t.tail))
                          : std::make_tuple(t.head, t.relation, t.tail);
    auto it = verdicts_.find(key);
    if (it != verdicts_.end()) {
      out.push_back(it->second);
    } else if (strict_) {
      throw InputError("verdict file has no entry for (" + t.head + ", " + t.relation + ", " +
                       t.tail + ")");
    } else {
      out.push_back(1);
    }
  }
  return out;
}

std::set<std::string> HeuristicValidator::default_stoplist() {
  return {"study", "outcome", "method", "approach", "result"};
}

HeuristicValidator::HeuristicValidator(std::set<std::string> stoplist,
                                       std::optional<RelationSchema> schema)
    : stoplist_(std::move(stoplist)), schema_(std::move(schema)) {}

std::set<std::string> HeuristicValidator::read_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open stoplist " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = text::normalize_label(line);
    if (!w.empty()) words.insert(std::move(w));
  }
  return words;
}

int HeuristicValidator::judge(const TripleText& t) const {
  if (t.head == t.tail) return 0;
  if (stoplist_.contains(text::normalize_label(t.head)) ||
      stoplist_.contains(text::normalize_label(t.tail))) {
    return 0;
  }
  if (schema_) {
    auto dr = schema_->domain_range.find(t.relation);
    if (dr != schema_->domain_range.end()) {
      auto ht = schema_->type_of.find(t.head);
      auto tt = schema_->type_of.find(t.tail);
      if (ht != schema_->type_of.end() && ht->second != dr->second.first) return 0;
      if (tt != schema_->type_of.end() && tt->second != dr->second.second) return 0;
    }
  }
  return 1;
}

std::vector<int> HeuristicValidator::validate(std::span<const TripleText> batch) {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(judge(t));
  return out;
}

RemoteValidator::RemoteValidator(RemoteOptions opts) : opts_(std::move(opts)) {
  if (opts_.timeout_ms <= 0) throw ConfigError("remote validator: timeout_ms must be > 0");
  if (opts_.batch_size == 0) throw ConfigError("remote validator: batch_size must be > 0");
  if (opts_.endpoint.empty()) throw ConfigError("remote validator: empty endpoint");
  if (opts_.max_in_flight == 0) opts_.max_in_flight = 1;
  // Split "http://host:port/prefix" into the client base and a path prefix.
  auto scheme_end = opts_.endpoint.find("://");
  auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = opts_.endpoint.find('/', host_start);
  if (path_start == std::string::npos) {
    scheme_host_port_ = opts_.endpoint;
  } else {
    scheme_host_port_ = opts_.endpoint.substr(0, path_start);
    base_path_ = opts_.endpoint.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
}

std::string RemoteValidator::encode_request(std::span<const TripleText> batch) {
  nlohmann::json triples = nlohmann::json::array();
  for (const auto& t : batch) {
    triples.push_back(
        {{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}, {"sentence", t.sentence}});
  }
  return nlohmann::json{{"triples", std::move(triples)}}.dump();
}

std::vector<int> RemoteValidator::decode_response(const std::string& body, std::size_t expected) {
  std::vector<int> verdicts;
  try {
    auto j = nlohmann::json::parse(body);
    for (const auto& v : j.at("verdicts")) {
      int x = v.get<int>();
      if (x != 0 && x != 1) throw ServiceError("verdict outside {0,1}");
      verdicts.push_back(x);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("malformed validator response: ") + e.what());
  }
  if (verdicts.size() != expected) {
    throw ServiceError("validator returned " + std::to_string(verdicts.size()) +
                       " verdicts for " + std::to_string(expected) + " triples");
  }
  return verdicts;
}

std::vector<int> RemoteValidator::post_batch(std::span<const TripleText> batch) const {
  const auto body = encode_request(batch);
  const auto path = base_path_ + "/validate";
  std::string last_error;
  int backoff = opts_.backoff_ms;
  for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    httplib::Client cli(scheme_host_port_);
    auto timeout = std::chrono::milliseconds(opts_.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = cli.Post(path, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    return decode_response(res->body, batch.size());
  }
  throw ServiceError("validator at " + opts_.endpoint + " failed after " +
                     std::to_string(opts_.retries + 1) + " attempts: " + last_error);
}

std::vector<int> RemoteValidator::validate(std::span<const TripleText> batch) {
  std::vector<int> out(batch.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (std::size_t i = 0; i < batch.size(); i += opts_.batch_size) {
    chunks.emplace_back(i, std::min(batch.size(), i + opts_.batch_size));
  }
  // Dispatch in waves of at most max_in_flight concurrent requests; results
  // land at their original offsets.
  for (std::size_t w = 0; w < chunks.size(); w += opts_.max_in_flight) {
    std::vector<std::future<std::vector<int>>> wave;
    auto wave_end = std::min(chunks.size(), w + opts_.max_in_flight);
    for (std::size_t c = w; c < wave_end; ++c) {
      auto [b, e] = chunks[c];
      wave.push_back(std::async(std::launch::async,
                                [this, batch, b, e] { return post_batch(batch.subspan(b, e - b)); }));
    }
    for (std::size_t c = w; c < wave_end; ++c) {
      auto verdicts = wave[c - w].get();
      std::copy(verdicts.begin(), verdicts.end(), out.begin() + chunks[c].first);
    }
  }
  return out;
}

std::optional<ValidatorKind> parse_validator_kind(std::string_view s) {
  if (s == "verdict-file") return ValidatorKind::verdict_file;
  if (s == "heuristic-mock" || s == "heuristic") return ValidatorKind::heuristic_mock;
  if (s == "remote-service" || s == "remote") return ValidatorKind::remote_service;
  if (s == "accept-all") return ValidatorKind::accept_all;
  if (s == "reject-all") return ValidatorKind::reject_all;
  return std::nullopt;
}

std::unique_ptr<Validator> make_validator(const ValidatorSpec& spec, bool normalize) {
  switch (spec.kind) {
    case ValidatorKind::verdict_file:
      return std::make_unique<VerdictFileValidator>(spec.verdict_file, spec.strict, normalize);
    case ValidatorKind::heuristic_mock:
      if (!spec.stoplist.empty()) {
        return std::make_unique<HeuristicValidator>(
            HeuristicValidator::read_stoplist(spec.stoplist));
      }
      return std::make_unique<HeuristicValidator>();
    case ValidatorKind::remote_service:
      return std::make_unique<RemoteValidator>(spec.remote);
    case ValidatorKind::accept_all:
      return std::make_unique<ConstantValidator>(1);
    case ValidatorKind::reject_all:
      return std::make_unique<ConstantValidator>(0);
  }
  throw ConfigError("unknown validator kind");
}

}  // namespace gssl
