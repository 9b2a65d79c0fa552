#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdv/core/json.hpp"
#include "pdv/core/types.hpp"
#include "pdv/infer/engine.hpp"
#include "pdv/query/query.hpp"
#include "pdv/tradeoff/tradeoff.hpp"

namespace pdv::context {

enum class EventKind { device_on, device_off, fact_asserted, fact_retracted, flag_set };
std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct ContextEvent {
  Timestamp timestamp{};
  EventKind kind = EventKind::fact_asserted;
  /// device_on / device_off.
  std::string device;
  /// fact_asserted / fact_retracted.
  std::optional<Fact> fact;
  /// flag_set.
  std::string parameter;
  int value = 0;
  bool operator==(const ContextEvent&) const = default;
};

/// `{"t": ..., "kind": ..., "payload": ...}` where payload is
/// `{"device": id}`, `{"fact": "atom(...)"}` or `{"parameter": id, "value": 0|1}`.
void to_json(Json& j, const ContextEvent& e);
void from_json(const Json& j, ContextEvent& e);
/// One event per non-empty line.
std::vector<ContextEvent> load_events(const std::string& path);

struct Monitor {
  /// Subject of useDevice facts asserted by device events.
  std::string owner;
  infer::RuleSet rules;
  infer::RiskBinding binding;
};

struct Applied {
  ContextState state;
  /// Set for no-op events such as retracting an absent fact.
  std::optional<std::string> warning;
};

/// Pure state transition. device_on asserts useDevice(owner, device) and
/// raises the flags of parameters that become inferable; device_off undoes
/// exactly that.
Applied apply_event(const ContextState& state, const ContextEvent& event, const Monitor& monitor);

enum class Action { keep, suspend };
std::string_view to_string(Action a);

struct GrantAction {
  std::string grant_id;
  Action action = Action::keep;
  /// Always set together with suspend.
  bool notify_owner = false;
  DecisionRecord reason;
};

/// A grant with the parties needed to re-decide it.
struct GrantUnderReview {
  query::Grant grant;
  Consumer consumer;
  BenefitOffer offer;
};

/// The query a grant releases: its allowed items at the granted accuracy.
query::Query granted_query(const query::Grant& grant);

/// Re-decides every active grant under `state`; grants whose utility is no
/// longer positive are suspended.
std::vector<GrantAction> reevaluate(const std::vector<GrantUnderReview>& grants, const ContextState& state,
                                    const OwnerPolicy& policy, const tradeoff::Environment& env, Timestamp now = {});

}  // namespace pdv::context
