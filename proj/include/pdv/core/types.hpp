#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdv/core/fact.hpp"
#include "pdv/core/time.hpp"

namespace pdv {

// Canonical privacy parameter ids.
inline constexpr std::string_view kPersonalInformation = "personal_information";
inline constexpr std::string_view kPresenceAbsence = "presence_absence";
inline constexpr std::string_view kRealtimeSurveillance = "realtime_surveillance";
inline constexpr std::string_view kHabits = "habits";
inline constexpr std::string_view kDeviceUse = "device_use";

struct PrivacyParameter {
  std::string id;
  std::string description;
  bool operator==(const PrivacyParameter&) const = default;
};

/// Open registry of privacy parameters, seeded with the five canonical ones.
class ParameterRegistry {
 public:
  ParameterRegistry();

  /// Throws invalid-argument for malformed or duplicate ids.
  void add(PrivacyParameter parameter);
  bool contains(std::string_view id) const;
  const std::vector<PrivacyParameter>& parameters() const { return parameters_; }
  std::vector<std::string> ids() const;

 private:
  std::vector<PrivacyParameter> parameters_;
};

bool is_valid_parameter_id(std::string_view id);

struct OwnerPolicy {
  std::map<std::string, double> parameter_weights;
  double tradeoff_bias_w = 0.5;
  std::map<std::string, double> benefit_multipliers;
  double default_trust = 0.5;
  bool operator==(const OwnerPolicy&) const = default;
};

struct PolicyViolation {
  std::string path;
  std::string message;
  bool operator==(const PolicyViolation&) const = default;
};

/// Every invariant violation with the path of the offending field. Empty means ok.
std::vector<PolicyViolation> validate_policy(const OwnerPolicy& policy,
                                             const ParameterRegistry& registry = {});

struct ContextState {
  std::map<std::string, int> flags;
  std::set<Fact> active_facts;
  /// Flags a running device switched from 0 to 1, restored when it stops.
  std::map<std::string, std::vector<std::string>> device_raised;
  bool operator==(const ContextState&) const = default;
};

/// All registered parameters flagged 1, no facts.
ContextState make_context(const ParameterRegistry& registry, int flag = 1);

enum class ProfileCategory { utility, edge_service, law_enforcement, marketer, healthcare, other };

struct Consumer {
  std::string id;
  std::string display_name;
  ProfileCategory profile_category = ProfileCategory::other;
  std::vector<double> ratings;
  bool operator==(const Consumer&) const = default;
};

enum class ValueKind { numeric, categorical };

struct Stream {
  std::string id;
  std::string unit;
  Duration native_period{0};
  ValueKind value_kind = ValueKind::numeric;
  bool operator==(const Stream&) const = default;
};

/// `ident ("." ident)*` with ident = [A-Za-z_][A-Za-z0-9_]*.
bool is_valid_stream_id(std::string_view id);

using Value = std::variant<double, std::string>;

struct Reading {
  Timestamp timestamp;
  Value value;
  bool operator==(const Reading&) const = default;
};

enum class BenefitCategory { financial, social, societal };

struct BenefitOffer {
  BenefitCategory category = BenefitCategory::financial;
  double declared_value = 0.0;
  std::string description;
  bool operator==(const BenefitOffer&) const = default;
};

struct ParameterRisk {
  std::string parameter;
  double weight = 0.0;
  int context_flag = 0;
  double leakage = 0.0;
  bool operator==(const ParameterRisk&) const = default;
};

struct ItemRisk {
  std::string item;
  /// Sum of weight * context flag over `parameters`.
  double sensitivity = 0.0;
  std::vector<ParameterRisk> parameters;
  bool operator==(const ItemRisk&) const = default;
};

/// risk_magnitude = (1 - trust) * sum over items and parameters of weight * flag * leakage.
struct RiskAssessment {
  std::vector<ItemRisk> items;
  double trust = 0.0;
  Duration sample_period{0};
  std::optional<double> noise_epsilon;
  double risk_magnitude = 0.0;
  std::vector<std::string> derivations;
  bool operator==(const RiskAssessment&) const = default;
};

enum class Outcome { answer, deny };

struct Degradation {
  Duration sample_period{0};
  std::optional<double> noise_epsilon;
  bool operator==(const Degradation&) const = default;
};

struct DecisionRecord {
  std::string id;
  std::string query;
  std::string consumer_id;
  double benefit = 0.0;
  double risk_magnitude = 0.0;
  double tradeoff_bias_w = 0.0;
  double utility = 0.0;
  Outcome outcome = Outcome::deny;
  Degradation degradation;
  Timestamp timestamp{};
  std::vector<std::string> explanation;
  RiskAssessment assessment;
  bool operator==(const DecisionRecord&) const = default;
};

std::string_view to_string(ProfileCategory c);
std::string_view to_string(ValueKind k);
std::string_view to_string(BenefitCategory c);
std::string_view to_string(Outcome o);
ProfileCategory parse_profile_category(std::string_view s);
ValueKind parse_value_kind(std::string_view s);
BenefitCategory parse_benefit_category(std::string_view s);
Outcome parse_outcome(std::string_view s);

}  // namespace pdv
