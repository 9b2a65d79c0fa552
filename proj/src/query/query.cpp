#include "pdv/query/query.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <random>
#include <set>

#include "pdv/core/error.hpp"
#include "pdv/core/fact.hpp"

namespace pdv::query {
namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  Query run() {
    Query q;
    keyword("GET");
    q.items.push_back(path());
    skip();
    while (peek() == ',') {
      advance();
      q.items.push_back(path());
      skip();
    }
    keyword("RANGE");
    q.from = timestamp();
    if (src_.substr(pos_, 2) != "..") fail("'..'");
    advance();
    advance();
    q.to = timestamp();
    if (at_keyword("SAMPLE")) {
      keyword("SAMPLE");
      q.sample_period = duration();
    }
    if (at_keyword("NOISE")) {
      keyword("NOISE");
      q.noise_epsilon = epsilon();
    }
    if (at_keyword("PURPOSE")) {
      keyword("PURPOSE");
      q.purpose = string();
    }
    skip();
    if (pos_ < src_.size()) fail(q.purpose ? "end of query" : q.noise_epsilon ? "'PURPOSE' or end of query"
                                 : q.sample_period ? "'NOISE', 'PURPOSE' or end of query"
                                                   : "'SAMPLE', 'NOISE', 'PURPOSE' or end of query");
    if (q.to < q.from) throw Error(Errc::invalid_range, "range end precedes its start");
    std::set<std::string> seen;
    for (const auto& item : q.items) {
      if (!seen.insert(item).second) throw Error(Errc::duplicate_item, item);
    }
    return q;
  }

 private:
  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  std::string found() const {
    if (pos_ >= src_.size()) return "end of input";
    return "'" + std::string(1, src_[pos_]) + "'";
  }

  [[noreturn]] void fail(const std::string& expected) const { throw SyntaxError(line_, col_, expected, found()); }

  std::string_view word() const {
    std::size_t end = pos_;
    while (end < src_.size() && ident_char(src_[end])) ++end;
    return src_.substr(pos_, end - pos_);
  }

  bool at_keyword(std::string_view kw) {
    skip();
    return word() == kw;
  }

  void keyword(std::string_view kw) {
    skip();
    if (word() != kw) fail("'" + std::string(kw) + "'");
    for (std::size_t i = 0; i < kw.size(); ++i) advance();
  }

  std::string ident() {
    if (!ident_start(peek())) fail("identifier");
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string path() {
    skip();
    std::string out = ident();
    while (peek() == '.' && !(pos_ + 1 < src_.size() && src_[pos_ + 1] == '.')) {
      advance();
      out += "." + ident();
    }
    return out;
  }

  Timestamp timestamp() {
    skip();
    std::size_t consumed = 0;
    const auto t = scan_rfc3339(src_.substr(pos_), consumed);
    if (!t) fail("RFC 3339 timestamp");
    for (std::size_t i = 0; i < consumed; ++i) advance();
    return *t;
  }

  Duration duration() {
    skip();
    const int line = line_, col = col_;
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    if (pos_ == start) fail("duration");
    while (std::isalpha(static_cast<unsigned char>(peek()))) advance();
    if (ident_char(peek())) fail("duration unit");
    Duration d{0};
    try {
      d = parse_duration(src_.substr(start, pos_ - start));
    } catch (const Error& e) {
      if (e.code() == Errc::unknown_duration_unit) throw;
      throw SyntaxError(line, col, "duration", "'" + std::string(src_.substr(start, pos_ - start)) + "'");
    }
    if (d.count() <= 0) throw Error(Errc::invalid_period, "sample period must be positive");
    return d;
  }

  double epsilon() {
    skip();
    if (src_.substr(pos_, 4) != "eps=") fail("'eps='");
    for (int i = 0; i < 4; ++i) advance();
    const char* begin = src_.data() + pos_;
    double value = 0;
    auto [end, ec] = std::from_chars(begin, src_.data() + src_.size(), value);
    if (ec != std::errc{} || end == begin) fail("number");
    for (auto n = end - begin; n > 0; --n) advance();
    if (!(value > 0) || !std::isfinite(value)) throw Error(Errc::nonpositive_epsilon, "eps must be positive");
    return value;
  }

  std::string string() {
    skip();
    const int line = line_, col = col_;
    if (peek() != '"') fail("string");
    advance();
    std::string out;
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') throw SyntaxError(line, col, "closing '\"'", "end of line");
      const char c = src_[pos_];
      advance();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      switch (peek()) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail("escape character");
      }
      advance();
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

/// Uniform in the open interval (0, 1) from the top 53 bits.
double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double laplace(std::mt19937_64& rng, double scale) {
  const double u = open_unit(rng) - 0.5;
  return -scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

Query parse_query(std::string_view text) { return Scanner(text).run(); }

std::string print_query(const Query& q) {
  std::string out = "GET ";
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (i) out += ", ";
    out += q.items[i];
  }
  out += " RANGE " + format_rfc3339(q.from) + ".." + format_rfc3339(q.to);
  if (q.sample_period) out += " SAMPLE " + format_duration(*q.sample_period);
  if (q.noise_epsilon) out += " NOISE eps=" + format_number(*q.noise_epsilon);
  if (q.purpose) out += " PURPOSE " + to_string(Term{StringLit{*q.purpose}});
  return out;
}

Duration effective_period(const Query& q, const std::vector<Stream>& streams) {
  Duration coarsest{0};
  for (const auto& item : q.items) {
    auto it = std::find_if(streams.begin(), streams.end(), [&](const Stream& s) { return s.id == item; });
    if (it == streams.end()) throw Error(Errc::unknown_stream, item);
    coarsest = std::max(coarsest, it->native_period);
  }
  return q.sample_period.value_or(coarsest);
}

std::string_view to_string(GrantStatus s) {
  switch (s) {
    case GrantStatus::active: return "active";
    case GrantStatus::suspended: return "suspended";
    case GrantStatus::revoked: return "revoked";
  }
  return "active";
}

GrantStatus parse_grant_status(std::string_view s) {
  if (s == "active") return GrantStatus::active;
  if (s == "suspended") return GrantStatus::suspended;
  if (s == "revoked") return GrantStatus::revoked;
  throw Error(Errc::decode_error, "unknown grant status: " + std::string(s));
}

Query rewrite(const Query& q, const Grant& grant, std::optional<Timestamp> now) {
  if (grant.status != GrantStatus::active) {
    throw Error(Errc::grant_inactive, "grant " + grant.id + " is " + std::string(to_string(grant.status)));
  }
  if (now && grant.expiry && *now >= *grant.expiry) throw Error(Errc::grant_inactive, "grant " + grant.id + " expired");
  for (const auto& item : q.items) {
    if (std::find(grant.query.items.begin(), grant.query.items.end(), item) == grant.query.items.end()) {
      throw Error(Errc::grant_mismatch, item + " is not covered by grant " + grant.id);
    }
  }
  if (q.from < grant.query.from || q.to > grant.query.to) {
    throw Error(Errc::grant_mismatch, "range outside grant " + grant.id);
  }
  Query out = q;
  out.items.clear();
  for (const auto& item : q.items) {
    if (std::find(grant.allowed_items.begin(), grant.allowed_items.end(), item) != grant.allowed_items.end()) {
      out.items.push_back(item);
    }
  }
  if (out.items.empty()) throw Error(Errc::empty_result_query, "grant " + grant.id + " allows none of the items");
  out.sample_period = std::max(q.sample_period.value_or(Duration{0}), grant.sample_period);
  if (grant.noise_epsilon) out.noise_epsilon = grant.noise_epsilon;
  return out;
}

double value_sensitivity(const store::ResultSet& result, std::optional<double> bound) {
  double lo = 0, hi = 0;
  bool any = false;
  for (const auto& r : result.readings) {
    const auto* v = std::get_if<double>(&r.value);
    if (!v) continue;
    lo = any ? std::min(lo, *v) : *v;
    hi = any ? std::max(hi, *v) : *v;
    any = true;
  }
  const double observed = hi - lo;
  if (!(observed > 0)) return bound.value_or(1.0);
  return bound ? std::min(observed, *bound) : observed;
}

store::ResultSet apply_noise(const store::ResultSet& result, double epsilon, double sensitivity,
                             std::optional<std::uint64_t> seed) {
  if (!(epsilon > 0)) throw Error(Errc::nonpositive_epsilon, "epsilon must be positive");
  if (!(sensitivity > 0)) throw Error(Errc::invalid_argument, "value sensitivity must be positive");
  store::ResultSet out = result;
  std::mt19937_64 rng(seed.value_or(fresh_seed()));
  const double scale = sensitivity / epsilon;
  for (auto& r : out.readings) {
    auto* v = std::get_if<double>(&r.value);
    if (!v) throw Error(Errc::categorical_stream, result.stream_id + " holds labels");
    *v += laplace(rng, scale);
  }
  out.accuracy.noise_epsilon = epsilon;
  return out;
}

std::vector<store::ResultSet> execute(const Query& q, const store::DataStore& store, const ExecOptions& options) {
  const Duration period = effective_period(q, store.streams());
  std::vector<store::ResultSet> out;
  std::optional<std::mt19937_64> seeds;
  if (options.seed) seeds.emplace(*options.seed);
  for (const auto& item : q.items) {
    auto result = store::downsample(store.range(item, q.from, q.to), period);
    if (q.noise_epsilon) {
      if (store.stream(item).value_kind == ValueKind::categorical) {
        throw Error(Errc::categorical_stream, item + " holds labels");
      }
      std::optional<double> bound;
      if (auto it = options.value_bounds.find(item); it != options.value_bounds.end()) bound = it->second;
      const std::optional<std::uint64_t> seed = seeds ? std::optional<std::uint64_t>((*seeds)()) : std::nullopt;
      result = apply_noise(result, *q.noise_epsilon, value_sensitivity(result, bound), seed);
    }
    out.push_back(std::move(result));
  }
  return out;
}

void to_json(Json& j, const Query& q) { j = print_query(q); }

void from_json(const Json& j, Query& q) {
  if (!j.is_string()) throw_decode_error("query must be a string");
  q = parse_query(j.get<std::string>());
}

void to_json(Json& j, const Grant& g) {
  j = Json{{"id", g.id},
           {"consumer_id", g.consumer_id},
           {"query", g.query},
           {"allowed_items", g.allowed_items},
           {"sample_period", encode_duration(g.sample_period)},
           {"noise_epsilon", g.noise_epsilon ? Json(*g.noise_epsilon) : Json(nullptr)},
           {"expiry", g.expiry ? encode_timestamp(*g.expiry) : Json(nullptr)},
           {"status", to_string(g.status)}};
}

void from_json(const Json& j, Grant& g) {
  g.id = j.at("id").get<std::string>();
  g.consumer_id = j.at("consumer_id").get<std::string>();
  g.query = j.at("query").get<Query>();
  g.allowed_items = j.at("allowed_items").get<std::vector<std::string>>();
  g.sample_period = decode_duration(j.at("sample_period"));
  g.noise_epsilon.reset();
  if (j.contains("noise_epsilon") && !j["noise_epsilon"].is_null()) g.noise_epsilon = j["noise_epsilon"].get<double>();
  g.expiry.reset();
  if (j.contains("expiry") && !j["expiry"].is_null()) g.expiry = decode_timestamp(j["expiry"]);
  g.status = parse_grant_status(j.at("status").get<std::string>());
}

}  // namespace pdv::query
