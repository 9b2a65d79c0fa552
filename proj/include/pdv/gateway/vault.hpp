#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdv/context/monitor.hpp"
#include "pdv/core/json.hpp"
#include "pdv/gateway/config.hpp"
#include "pdv/query/query.hpp"
#include "pdv/store/datastore.hpp"
#include "pdv/tradeoff/tradeoff.hpp"

namespace pdv::gateway {

enum class RequestState { pending, assessed, countered, accepted, denied, expired, withdrawn };
std::string_view to_string(RequestState s);
RequestState parse_request_state(std::string_view s);
bool is_terminal(RequestState s);
/// Edges of the request lifecycle.
bool is_allowed_transition(RequestState from, RequestState to);

struct DataRequest {
  std::string id;
  std::string consumer_id;
  query::Query query;
  BenefitOffer offer;
  RequestState state = RequestState::pending;
  Timestamp submitted{};
  /// Latest recommendation at the requested accuracy.
  std::optional<DecisionRecord> recommendation;
  /// Accuracy offered back to the consumer while countered.
  std::optional<Degradation> counter;
  std::optional<std::string> grant_id;
  bool operator==(const DataRequest&) const = default;
};

struct GrantRecord {
  query::Grant grant;
  std::string request_id;
  /// The decision the grant was created under.
  std::string decision_id;
  bool operator==(const GrantRecord&) const = default;
};

enum class NotificationKind { new_request, grant_suspended, counter_received };
std::string_view to_string(NotificationKind k);
NotificationKind parse_notification_kind(std::string_view s);

struct Notification {
  std::string id;
  NotificationKind kind = NotificationKind::new_request;
  Timestamp timestamp{};
  std::string request_id;
  std::optional<std::string> grant_id;
  std::optional<std::string> decision_id;
  bool read = false;
  bool operator==(const Notification&) const = default;
};

struct FetchRecord {
  Timestamp timestamp{};
  std::string request_id;
  std::string grant_id;
  std::string decision_id;
  std::string consumer_id;
  std::string query;
  bool operator==(const FetchRecord&) const = default;
};

enum class OwnerAction { accept, deny, counter };
OwnerAction parse_owner_action(std::string_view s);

enum class ConsumerAction { accept_counter, raise_offer, withdraw };
ConsumerAction parse_consumer_action(std::string_view s);

struct Preview {
  Duration sample_period{0};
  double benefit = 0;
  double risk_magnitude = 0;
  double tradeoff_bias_w = 0;
  double utility = 0;
  Outcome outcome = Outcome::deny;
};

struct EventOutcome {
  std::vector<std::string> warnings;
  std::vector<std::string> suspended_grants;
};

void to_json(Json& j, const DataRequest& r);
void from_json(const Json& j, DataRequest& r);
void to_json(Json& j, const GrantRecord& g);
void from_json(const Json& j, GrantRecord& g);
void to_json(Json& j, const Notification& n);
void from_json(const Json& j, Notification& n);
void to_json(Json& j, const FetchRecord& f);
void from_json(const Json& j, FetchRecord& f);
void to_json(Json& j, const Preview& p);

using Clock = std::function<Timestamp()>;
Timestamp system_now();

/// All owner-side state behind one lock. Every mutation is persisted to
/// `state_dir` before the call returns: `vault.jsonl` journals request,
/// grant, notification, policy and context changes,
/// `audit.jsonl` every decision record, `fetches.jsonl` every release and
/// `pds/` the personal data store.
class Vault {
 public:
  explicit Vault(Config config, Clock clock = system_now);

  const Config& config() const { return config_; }

  DataRequest submit(const std::string& consumer_id, const std::string& query_text, const BenefitOffer& offer);
  DataRequest owner_decide(const std::string& request_id, OwnerAction action);
  DataRequest consumer_respond(const std::string& consumer_id, const std::string& request_id, ConsumerAction action,
                               const std::optional<BenefitOffer>& offer = std::nullopt);
  /// Throws request-denied, invalid-state-transition or grant-inactive unless
  /// the request holds an active grant.
  std::vector<store::ResultSet> fetch(const std::string& consumer_id, const std::string& request_id);
  Preview preview(const std::string& request_id, Duration period) const;

  void ingest_readings(const std::string& stream_id, const std::vector<Reading>& readings);
  EventOutcome ingest_events(const std::vector<context::ContextEvent>& events);

  void rate(const std::string& consumer_id, double rating);
  void set_policy(const OwnerPolicy& policy);
  GrantRecord revoke_grant(const std::string& grant_id);
  /// Owner override of a suspension.
  GrantRecord reinstate_grant(const std::string& grant_id);
  void mark_read(const std::string& notification_id);

  std::vector<DataRequest> requests() const;
  DataRequest request(const std::string& id) const;
  std::vector<GrantRecord> grants() const;
  std::vector<Notification> notifications() const;
  std::vector<DecisionRecord> decisions() const;
  std::vector<FetchRecord> fetches() const;
  ContextState context() const;
  OwnerPolicy policy() const;
  Consumer consumer(const std::string& id) const;
  std::vector<Stream> streams() const;

 private:
  DataRequest& find_request(const std::string& id);
  GrantRecord& find_grant(const std::string& id);
  const Consumer& find_consumer(const std::string& id) const;
  DecisionRecord record_decision(const query::Query& q, const Consumer& c, const BenefitOffer& offer);
  void assess(DataRequest& r);
  void auto_resolve(DataRequest& r);
  void transition(DataRequest& r, RequestState to);
  void accept(DataRequest& r, const Degradation& accuracy);
  void notify(NotificationKind kind, const std::string& request_id, std::optional<std::string> grant_id = {},
              std::optional<std::string> decision_id = {});
  void reevaluate_grants();
  std::string next_id(const char* prefix);
  void load();
  Json pending_changes();
  void save();
  void append_line(const char* file, const Json& j) const;

  Config config_;
  Clock clock_;
  tradeoff::Environment env_;
  context::Monitor monitor_;
  std::unique_ptr<store::DataStore> store_;

  mutable std::mutex mutex_;
  OwnerPolicy policy_;
  ContextState context_;
  std::map<std::string, Consumer> consumers_;
  std::map<std::string, DataRequest> requests_;
  std::map<std::string, GrantRecord> grants_;
  std::vector<Notification> notifications_;
  std::vector<DecisionRecord> decisions_;
  std::vector<FetchRecord> fetches_;
  std::map<std::string, std::uint64_t> counters_;
  std::set<std::string> dirty_requests_, dirty_grants_, dirty_consumers_, dirty_notifications_;
  bool dirty_policy_ = false;
  bool dirty_context_ = false;
};

}  // namespace pdv::gateway
