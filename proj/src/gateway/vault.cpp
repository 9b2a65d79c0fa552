#include "pdv/gateway/vault.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pdv/core/error.hpp"

namespace pdv::gateway {
namespace {

constexpr std::string_view kRequestStates[] = {"pending", "assessed", "countered", "accepted",
                                               "denied",  "expired",  "withdrawn"};
constexpr std::string_view kNotificationKinds[] = {"new_request", "grant_suspended", "counter_received"};

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw Error(Errc::invalid_argument, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// "r12" sorts after "r9".
bool id_less(const std::string& a, const std::string& b) {
  return a.size() != b.size() ? a.size() < b.size() : a < b;
}

template <typename T>
std::optional<T> opt(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

void validate_offer(const BenefitOffer& offer) {
  if (!std::isfinite(offer.declared_value) || offer.declared_value < 0) {
    throw Error(Errc::invalid_argument, "declared benefit value must be a non-negative number");
  }
}

std::vector<Json> read_lines(const std::filesystem::path& path) {
  std::vector<Json> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception&) {
      break;  // torn tail from a crash
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(RequestState s) { return kRequestStates[static_cast<int>(s)]; }
RequestState parse_request_state(std::string_view s) {
  return parse_enum<RequestState>(s, kRequestStates, "request state");
}

bool is_terminal(RequestState s) {
  return s == RequestState::accepted || s == RequestState::denied || s == RequestState::expired ||
         s == RequestState::withdrawn;
}

bool is_allowed_transition(RequestState from, RequestState to) {
  using S = RequestState;
  switch (from) {
    case S::pending: return to == S::assessed || to == S::withdrawn || to == S::expired;
    case S::assessed:
      return to == S::countered || to == S::accepted || to == S::denied || to == S::withdrawn || to == S::expired;
    case S::countered:
      return to == S::assessed || to == S::accepted || to == S::denied || to == S::withdrawn || to == S::expired;
    default: return false;
  }
}

std::string_view to_string(NotificationKind k) { return kNotificationKinds[static_cast<int>(k)]; }
NotificationKind parse_notification_kind(std::string_view s) {
  return parse_enum<NotificationKind>(s, kNotificationKinds, "notification kind");
}

OwnerAction parse_owner_action(std::string_view s) {
  constexpr std::string_view names[] = {"accept", "deny", "counter"};
  return parse_enum<OwnerAction>(s, names, "owner action");
}

ConsumerAction parse_consumer_action(std::string_view s) {
  constexpr std::string_view names[] = {"accept_counter", "raise_offer", "withdraw"};
  return parse_enum<ConsumerAction>(s, names, "consumer action");
}

void to_json(Json& j, const DataRequest& r) {
  j = {{"id", r.id},
       {"consumer_id", r.consumer_id},
       {"query", r.query},
       {"offer", r.offer},
       {"state", to_string(r.state)},
       {"submitted", encode_timestamp(r.submitted)},
       {"recommendation", r.recommendation ? Json(*r.recommendation) : Json()},
       {"counter", r.counter ? Json(*r.counter) : Json()},
       {"grant_id", r.grant_id ? Json(*r.grant_id) : Json()}};
}

void from_json(const Json& j, DataRequest& r) {
  r.id = j.at("id").get<std::string>();
  r.consumer_id = j.at("consumer_id").get<std::string>();
  r.query = j.at("query").get<query::Query>();
  r.offer = j.at("offer").get<BenefitOffer>();
  r.state = parse_request_state(j.at("state").get<std::string>());
  r.submitted = decode_timestamp(j.at("submitted"));
  r.recommendation = opt<DecisionRecord>(j, "recommendation");
  r.counter = opt<Degradation>(j, "counter");
  r.grant_id = opt<std::string>(j, "grant_id");
}

void to_json(Json& j, const GrantRecord& g) {
  j = g.grant;
  j["request_id"] = g.request_id;
  j["decision_id"] = g.decision_id;
}

void from_json(const Json& j, GrantRecord& g) {
  g.grant = j.get<query::Grant>();
  g.request_id = j.at("request_id").get<std::string>();
  g.decision_id = j.at("decision_id").get<std::string>();
}

void to_json(Json& j, const Notification& n) {
  j = {{"id", n.id},
       {"kind", to_string(n.kind)},
       {"t", encode_timestamp(n.timestamp)},
       {"request_id", n.request_id},
       {"grant_id", n.grant_id ? Json(*n.grant_id) : Json()},
       {"decision_id", n.decision_id ? Json(*n.decision_id) : Json()},
       {"read", n.read}};
}

void from_json(const Json& j, Notification& n) {
  n.id = j.at("id").get<std::string>();
  n.kind = parse_notification_kind(j.at("kind").get<std::string>());
  n.timestamp = decode_timestamp(j.at("t"));
  n.request_id = j.at("request_id").get<std::string>();
  n.grant_id = opt<std::string>(j, "grant_id");
  n.decision_id = opt<std::string>(j, "decision_id");
  n.read = j.value("read", false);
}

void to_json(Json& j, const FetchRecord& f) {
  j = {{"t", encode_timestamp(f.timestamp)}, {"request_id", f.request_id}, {"grant_id", f.grant_id},
       {"decision_id", f.decision_id},       {"consumer_id", f.consumer_id}, {"query", f.query}};
}

void from_json(const Json& j, FetchRecord& f) {
  f.timestamp = decode_timestamp(j.at("t"));
  f.request_id = j.at("request_id").get<std::string>();
  f.grant_id = j.at("grant_id").get<std::string>();
  f.decision_id = j.at("decision_id").get<std::string>();
  f.consumer_id = j.at("consumer_id").get<std::string>();
  f.query = j.at("query").get<std::string>();
}

void to_json(Json& j, const Preview& p) {
  j = {{"sample_period", encode_duration(p.sample_period)},
       {"benefit", p.benefit},
       {"risk_magnitude", p.risk_magnitude},
       {"tradeoff_bias_w", p.tradeoff_bias_w},
       {"utility", p.utility},
       {"outcome", to_string(p.outcome)}};
}

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

Vault::Vault(Config config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {
  env_.rules = config_.rules;
  env_.binding = config_.binding;
  env_.calibration = config_.calibration;
  env_.streams = config_.streams;
  env_.max_depth = config_.max_depth;
  monitor_ = context::Monitor{config_.owner, config_.rules, config_.binding};
  std::filesystem::create_directories(config_.state_dir);
  store_ = std::make_unique<store::DataStore>(config_.state_dir / "pds");
  for (const auto& s : config_.streams) {
    if (!store_->has_stream(s.id)) store_->register_stream(s);
  }
  load();
}

void Vault::load() {
  policy_ = config_.policy;
  context_ = make_context(env_.registry, 1);
  for (const auto& f : config_.context_facts) context_.active_facts.insert(f);
  for (const auto& c : config_.consumers) consumers_[c.consumer.id] = c.consumer;

  for (const auto& j : read_lines(config_.state_dir / "audit.jsonl")) decisions_.push_back(decode<DecisionRecord>(j));
  for (const auto& j : read_lines(config_.state_dir / "fetches.jsonl")) fetches_.push_back(decode<FetchRecord>(j));
  std::map<std::string, const DecisionRecord*> by_id;
  for (const auto& d : decisions_) by_id[d.id] = &d;

  // Each journal line holds the entities one mutation changed; later lines win.
  const auto journal = config_.state_dir / "vault.jsonl";
  try {
    for (const auto& j : read_lines(journal)) {
      if (j.contains("policy")) policy_ = j["policy"].get<OwnerPolicy>();
      if (j.contains("context")) context_ = j["context"].get<ContextState>();
      if (j.contains("counters")) counters_ = j["counters"].get<std::map<std::string, std::uint64_t>>();
      for (const auto& c : j.value("consumers", Json::array())) {
        auto consumer = c.get<Consumer>();
        consumers_[consumer.id] = consumer;
      }
      for (auto r : j.value("requests", Json::array())) {
        const Json ref = r.at("recommendation");
        r["recommendation"] = nullptr;
        auto req = r.get<DataRequest>();
        if (ref.is_string()) {
          auto it = by_id.find(ref.get<std::string>());
          if (it == by_id.end()) {
            throw Error(Errc::decode_error, req.id + ": decision " + ref.get<std::string>() + " missing from audit log");
          }
          req.recommendation = *it->second;
        }
        requests_[req.id] = std::move(req);
      }
      for (const auto& g : j.value("grants", Json::array())) {
        auto grant = g.get<GrantRecord>();
        grants_[grant.grant.id] = grant;
      }
      for (const auto& n : j.value("notifications", Json::array())) {
        auto note = n.get<Notification>();
        auto it = std::find_if(notifications_.begin(), notifications_.end(), [&](const auto& x) { return x.id == note.id; });
        if (it == notifications_.end()) notifications_.push_back(std::move(note));
        else *it = std::move(note);
      }
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, journal.string() + ": " + e.what());
  }

  // Compact the journal into one line.
  for (const auto& [id, _] : requests_) dirty_requests_.insert(id);
  for (const auto& [id, _] : grants_) dirty_grants_.insert(id);
  for (const auto& [id, _] : consumers_) dirty_consumers_.insert(id);
  for (const auto& n : notifications_) dirty_notifications_.insert(n.id);
  dirty_policy_ = dirty_context_ = true;
  const auto tmp = config_.state_dir / "vault.jsonl.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << pending_changes().dump() << '\n';
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, journal);
}

Json Vault::pending_changes() {
  Json j = {{"counters", counters_}};
  auto list = [&](const char* key, std::set<std::string>& ids, auto&& encode) {
    if (ids.empty()) return;
    Json arr = Json::array();
    for (const auto& id : ids) arr.push_back(encode(id));
    j[key] = std::move(arr);
    ids.clear();
  };
  list("requests", dirty_requests_, [&](const std::string& id) {
    const auto& r = requests_.at(id);
    Json rj = r;
    rj["recommendation"] = r.recommendation ? Json(r.recommendation->id) : Json();
    return rj;
  });
  list("grants", dirty_grants_, [&](const std::string& id) { return Json(grants_.at(id)); });
  list("consumers", dirty_consumers_, [&](const std::string& id) { return Json(consumers_.at(id)); });
  list("notifications", dirty_notifications_, [&](const std::string& id) {
    for (const auto& n : notifications_) {
      if (n.id == id) return Json(n);
    }
    return Json();
  });
  if (dirty_policy_) j["policy"] = policy_;
  if (dirty_context_) j["context"] = context_;
  dirty_policy_ = dirty_context_ = false;
  return j;
}

void Vault::save() { append_line("vault.jsonl", pending_changes()); }

void Vault::append_line(const char* file, const Json& j) const {
  std::ofstream out(config_.state_dir / file, std::ios::app);
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::io_error, std::string("cannot append to ") + file);
}

std::string Vault::next_id(const char* prefix) { return prefix + std::to_string(++counters_[prefix]); }

DataRequest& Vault::find_request(const std::string& id) {
  auto it = requests_.find(id);
  if (it == requests_.end()) throw Error(Errc::unknown_request, id);
  return it->second;
}

GrantRecord& Vault::find_grant(const std::string& id) {
  auto it = grants_.find(id);
  if (it == grants_.end()) throw Error(Errc::unknown_grant, id);
  return it->second;
}

const Consumer& Vault::find_consumer(const std::string& id) const {
  auto it = consumers_.find(id);
  if (it == consumers_.end()) throw Error(Errc::unknown_consumer, id);
  return it->second;
}

void Vault::transition(DataRequest& r, RequestState to) {
  if (!is_allowed_transition(r.state, to)) {
    throw Error(Errc::invalid_state_transition,
                r.id + " is " + std::string(to_string(r.state)) + ", cannot become " + std::string(to_string(to)));
  }
  r.state = to;
}

DecisionRecord Vault::record_decision(const query::Query& q, const Consumer& c, const BenefitOffer& offer) {
  auto d = tradeoff::decide(q, c, offer, policy_, context_, env_, clock_(), next_id("d"));
  decisions_.push_back(d);
  append_line("audit.jsonl", d);
  return d;
}

void Vault::notify(NotificationKind kind, const std::string& request_id, std::optional<std::string> grant_id,
                   std::optional<std::string> decision_id) {
  notifications_.push_back(
      Notification{next_id("n"), kind, clock_(), request_id, std::move(grant_id), std::move(decision_id), false});
  dirty_notifications_.insert(notifications_.back().id);
}

void Vault::assess(DataRequest& r) {
  transition(r, RequestState::assessed);
  r.recommendation = record_decision(r.query, find_consumer(r.consumer_id), r.offer);
  r.counter.reset();
}

void Vault::auto_resolve(DataRequest& r) {
  if (r.recommendation->outcome == Outcome::answer) {
    accept(r, r.recommendation->degradation);
    return;
  }
  r.counter = tradeoff::min_degradation(r.query, find_consumer(r.consumer_id), r.offer, policy_, context_, env_);
  transition(r, r.counter ? RequestState::countered : RequestState::denied);
}

void Vault::accept(DataRequest& r, const Degradation& accuracy) {
  transition(r, RequestState::accepted);
  query::Grant g;
  g.id = next_id("g");
  g.consumer_id = r.consumer_id;
  g.query = r.query;
  g.allowed_items = r.query.items;
  g.sample_period = accuracy.sample_period;
  g.noise_epsilon = accuracy.noise_epsilon;
  const auto d = record_decision(context::granted_query(g), find_consumer(r.consumer_id), r.offer);
  r.grant_id = g.id;
  grants_[g.id] = GrantRecord{g, r.id, d.id};
  dirty_grants_.insert(g.id);
}

void Vault::reevaluate_grants() {
  std::vector<context::GrantUnderReview> review;
  for (const auto& [_, g] : grants_) {
    if (g.grant.status != query::GrantStatus::active) continue;
    const auto& r = requests_.at(g.request_id);
    review.push_back({g.grant, find_consumer(g.grant.consumer_id), r.offer});
  }
  for (auto& a : context::reevaluate(review, context_, policy_, env_, clock_())) {
    if (a.action != context::Action::suspend) continue;
    a.reason.id = next_id("d");
    decisions_.push_back(a.reason);
    append_line("audit.jsonl", a.reason);
    auto& g = grants_.at(a.grant_id);
    g.grant.status = query::GrantStatus::suspended;
    dirty_grants_.insert(g.grant.id);
    notify(NotificationKind::grant_suspended, g.request_id, g.grant.id, a.reason.id);
  }
}

DataRequest Vault::submit(const std::string& consumer_id, const std::string& query_text, const BenefitOffer& offer) {
  std::lock_guard lock(mutex_);
  find_consumer(consumer_id);
  validate_offer(offer);
  DataRequest r;
  r.consumer_id = consumer_id;
  r.query = query::parse_query(query_text);
  r.offer = offer;
  r.submitted = clock_();
  query::effective_period(r.query, env_.streams);
  r.id = next_id("r");
  assess(r);
  notify(NotificationKind::new_request, r.id);
  if (config_.auto_accept) auto_resolve(r);
  requests_[r.id] = r;
  dirty_requests_.insert(r.id);
  save();
  return r;
}

DataRequest Vault::owner_decide(const std::string& request_id, OwnerAction action) {
  std::lock_guard lock(mutex_);
  auto r = find_request(request_id);
  if (r.state != RequestState::assessed && r.state != RequestState::countered) {
    throw Error(Errc::invalid_state_transition, r.id + " is " + std::string(to_string(r.state)));
  }
  switch (action) {
    case OwnerAction::accept:
      accept(r, r.state == RequestState::countered ? *r.counter : r.recommendation->degradation);
      break;
    case OwnerAction::deny: transition(r, RequestState::denied); break;
    case OwnerAction::counter: {
      auto counter = tradeoff::min_degradation(r.query, find_consumer(r.consumer_id), r.offer, policy_, context_, env_);
      if (!counter) throw Error(Errc::precondition_violation, "no coarser accuracy is answered");
      if (r.state == RequestState::assessed) transition(r, RequestState::countered);
      r.counter = counter;
      break;
    }
  }
  requests_[r.id] = r;
  dirty_requests_.insert(r.id);
  save();
  return r;
}

DataRequest Vault::consumer_respond(const std::string& consumer_id, const std::string& request_id,
                                    ConsumerAction action, const std::optional<BenefitOffer>& offer) {
  std::lock_guard lock(mutex_);
  auto r = find_request(request_id);
  if (r.consumer_id != consumer_id) throw Error(Errc::forbidden, request_id);
  switch (action) {
    case ConsumerAction::accept_counter:
      if (r.state != RequestState::countered) throw Error(Errc::invalid_state_transition, r.id + " has no counter");
      accept(r, *r.counter);
      break;
    case ConsumerAction::raise_offer:
      if (r.state != RequestState::countered) throw Error(Errc::invalid_state_transition, r.id + " has no counter");
      if (!offer) throw Error(Errc::invalid_argument, "raise_offer needs an offer");
      validate_offer(*offer);
      r.offer = *offer;
      assess(r);
      notify(NotificationKind::counter_received, r.id, std::nullopt, r.recommendation->id);
      if (config_.auto_accept) auto_resolve(r);
      break;
    case ConsumerAction::withdraw: transition(r, RequestState::withdrawn); break;
  }
  requests_[r.id] = r;
  dirty_requests_.insert(r.id);
  save();
  return r;
}

std::vector<store::ResultSet> Vault::fetch(const std::string& consumer_id, const std::string& request_id) {
  std::lock_guard lock(mutex_);
  const auto& r = find_request(request_id);
  if (r.consumer_id != consumer_id) throw Error(Errc::forbidden, request_id);
  if (r.state == RequestState::denied) throw Error(Errc::request_denied, request_id);
  if (r.state != RequestState::accepted) {
    throw Error(Errc::invalid_state_transition, request_id + " is " + std::string(to_string(r.state)));
  }
  const auto& g = grants_.at(*r.grant_id);
  const auto now = clock_();
  const auto q = query::rewrite(r.query, g.grant, now);
  query::ExecOptions opts;
  opts.value_bounds = config_.value_bounds;
  opts.seed = config_.seed ^ fnv1a(g.grant.id);
  auto results = query::execute(q, *store_, opts);
  FetchRecord f{now, r.id, g.grant.id, g.decision_id, consumer_id, query::print_query(q)};
  fetches_.push_back(f);
  append_line("fetches.jsonl", f);
  return results;
}

Preview Vault::preview(const std::string& request_id, Duration period) const {
  std::lock_guard lock(mutex_);
  auto it = requests_.find(request_id);
  if (it == requests_.end()) throw Error(Errc::unknown_request, request_id);
  if (period.count() <= 0) throw Error(Errc::invalid_period, "period must be positive");
  auto q = it->second.query;
  q.sample_period = period;
  const auto d = tradeoff::decide(q, find_consumer(it->second.consumer_id), it->second.offer, policy_, context_, env_);
  return Preview{d.degradation.sample_period, d.benefit, d.risk_magnitude, d.tradeoff_bias_w, d.utility, d.outcome};
}

void Vault::ingest_readings(const std::string& stream_id, const std::vector<Reading>& readings) {
  std::lock_guard lock(mutex_);
  store_->append_all(stream_id, readings);
}

EventOutcome Vault::ingest_events(const std::vector<context::ContextEvent>& events) {
  std::lock_guard lock(mutex_);
  EventOutcome out;
  for (const auto& e : events) {
    auto applied = context::apply_event(context_, e, monitor_);
    if (applied.warning) out.warnings.push_back(*applied.warning);
    context_ = std::move(applied.state);
    dirty_context_ = true;
    const auto before = notifications_.size();
    reevaluate_grants();
    for (auto i = before; i < notifications_.size(); ++i) out.suspended_grants.push_back(*notifications_[i].grant_id);
  }
  save();
  return out;
}

void Vault::rate(const std::string& consumer_id, double rating) {
  std::lock_guard lock(mutex_);
  if (!(rating >= 0 && rating <= 1)) throw Error(Errc::out_of_range_rating, "rating must lie in [0, 1]");
  find_consumer(consumer_id);
  consumers_[consumer_id].ratings.push_back(rating);
  dirty_consumers_.insert(consumer_id);
  reevaluate_grants();
  save();
}

void Vault::set_policy(const OwnerPolicy& policy) {
  std::lock_guard lock(mutex_);
  if (const auto v = validate_policy(policy, env_.registry); !v.empty()) {
    throw Error(Errc::invalid_policy, v.front().path + ": " + v.front().message);
  }
  policy_ = policy;
  dirty_policy_ = true;
  reevaluate_grants();
  save();
}

GrantRecord Vault::revoke_grant(const std::string& grant_id) {
  std::lock_guard lock(mutex_);
  auto& g = find_grant(grant_id);
  if (g.grant.status == query::GrantStatus::revoked) throw Error(Errc::invalid_state_transition, "already revoked");
  g.grant.status = query::GrantStatus::revoked;
  dirty_grants_.insert(grant_id);
  save();
  return g;
}

GrantRecord Vault::reinstate_grant(const std::string& grant_id) {
  std::lock_guard lock(mutex_);
  auto& g = find_grant(grant_id);
  if (g.grant.status != query::GrantStatus::suspended) {
    throw Error(Errc::invalid_state_transition, grant_id + " is not suspended");
  }
  g.grant.status = query::GrantStatus::active;
  dirty_grants_.insert(grant_id);
  save();
  return g;
}

void Vault::mark_read(const std::string& notification_id) {
  std::lock_guard lock(mutex_);
  for (auto& n : notifications_) {
    if (n.id == notification_id) {
      n.read = true;
      dirty_notifications_.insert(n.id);
      save();
      return;
    }
  }
  throw Error(Errc::invalid_argument, "unknown notification " + notification_id);
}

std::vector<DataRequest> Vault::requests() const {
  std::lock_guard lock(mutex_);
  std::vector<DataRequest> out;
  for (const auto& [_, r] : requests_) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return id_less(a.id, b.id); });
  return out;
}

DataRequest Vault::request(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = requests_.find(id);
  if (it == requests_.end()) throw Error(Errc::unknown_request, id);
  return it->second;
}

std::vector<GrantRecord> Vault::grants() const {
  std::lock_guard lock(mutex_);
  std::vector<GrantRecord> out;
  for (const auto& [_, g] : grants_) out.push_back(g);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return id_less(a.grant.id, b.grant.id); });
  return out;
}

std::vector<Notification> Vault::notifications() const {
  std::lock_guard lock(mutex_);
  return notifications_;
}

std::vector<DecisionRecord> Vault::decisions() const {
  std::lock_guard lock(mutex_);
  return decisions_;
}

std::vector<FetchRecord> Vault::fetches() const {
  std::lock_guard lock(mutex_);
  return fetches_;
}

ContextState Vault::context() const {
  std::lock_guard lock(mutex_);
  return context_;
}

OwnerPolicy Vault::policy() const {
  std::lock_guard lock(mutex_);
  return policy_;
}

Consumer Vault::consumer(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return find_consumer(id);
}

std::vector<Stream> Vault::streams() const { return env_.streams; }

}  // namespace pdv::gateway
