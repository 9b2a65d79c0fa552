#include "pdv/core/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pdv/core/error.hpp"

namespace pdv {

bool is_valid_parameter_id(std::string_view id) {
  if (id.empty()) return false;
  if (!std::islower(static_cast<unsigned char>(id.front()))) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
           c == '_';
  });
}

ParameterRegistry::ParameterRegistry()
    : parameters_{
          {std::string(kPersonalInformation), "user personal information"},
          {std::string(kPresenceAbsence), "presence or absence at home"},
          {std::string(kRealtimeSurveillance), "real-time surveillance"},
          {std::string(kHabits), "habits and behaviour patterns"},
          {std::string(kDeviceUse), "use of a specific device"},
      } {}

void ParameterRegistry::add(PrivacyParameter parameter) {
  if (!is_valid_parameter_id(parameter.id)) {
    throw Error(Errc::invalid_argument, "privacy parameter id must be lowercase: '" + parameter.id + "'");
  }
  if (contains(parameter.id)) {
    throw Error(Errc::invalid_argument, "duplicate privacy parameter: " + parameter.id);
  }
  parameters_.push_back(std::move(parameter));
}

bool ParameterRegistry::contains(std::string_view id) const {
  return std::any_of(parameters_.begin(), parameters_.end(),
                     [&](const PrivacyParameter& p) { return p.id == id; });
}

std::vector<std::string> ParameterRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& p : parameters_) out.push_back(p.id);
  return out;
}

std::vector<PolicyViolation> validate_policy(const OwnerPolicy& policy,
                                             const ParameterRegistry& registry) {
  std::vector<PolicyViolation> out;
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  for (const auto& p : registry.parameters()) {
    if (!policy.parameter_weights.count(p.id)) {
      out.push_back({"parameter_weights." + p.id, "missing parameter weight: " + p.id});
    }
  }
  for (const auto& [id, weight] : policy.parameter_weights) {
    if (!registry.contains(id)) {
      out.push_back({"parameter_weights." + id, "unknown privacy parameter: " + id});
    }
    if (!in_unit(weight)) {
      out.push_back({"parameter_weights." + id, "weight out of range: " + id});
    }
  }
  if (!in_unit(policy.tradeoff_bias_w)) {
    out.push_back({"tradeoff_bias_w", "tradeoff_bias_w out of range"});
  }
  if (!in_unit(policy.default_trust)) {
    out.push_back({"default_trust", "default_trust out of range"});
  }
  for (const auto& [category, multiplier] : policy.benefit_multipliers) {
    if (!std::isfinite(multiplier) || multiplier < 0.0) {
      out.push_back({"benefit_multipliers." + category, "negative benefit multiplier: " + category});
    }
  }
  return out;
}

ContextState make_context(const ParameterRegistry& registry, int flag) {
  ContextState state;
  for (const auto& p : registry.parameters()) state.flags[p.id] = flag;
  return state;
}

bool is_valid_stream_id(std::string_view id) {
  bool at_segment_start = true;
  for (char c : id) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '.') {
      if (at_segment_start) return false;
      at_segment_start = true;
      continue;
    }
    if (at_segment_start) {
      if (!std::isalpha(u) && c != '_') return false;
      at_segment_start = false;
    } else if (!std::isalnum(u) && c != '_') {
      return false;
    }
  }
  return !at_segment_start;
}

std::string_view to_string(ProfileCategory c) {
  switch (c) {
    case ProfileCategory::utility: return "utility";
    case ProfileCategory::edge_service: return "edge_service";
    case ProfileCategory::law_enforcement: return "law_enforcement";
    case ProfileCategory::marketer: return "marketer";
    case ProfileCategory::healthcare: return "healthcare";
    case ProfileCategory::other: return "other";
  }
  return "other";
}

std::string_view to_string(ValueKind k) { return k == ValueKind::numeric ? "numeric" : "categorical"; }

std::string_view to_string(BenefitCategory c) {
  switch (c) {
    case BenefitCategory::financial: return "financial";
    case BenefitCategory::social: return "social";
    case BenefitCategory::societal: return "societal";
  }
  return "financial";
}

std::string_view to_string(Outcome o) { return o == Outcome::answer ? "Answer" : "Deny"; }

ProfileCategory parse_profile_category(std::string_view s) {
  for (auto c : {ProfileCategory::utility, ProfileCategory::edge_service, ProfileCategory::law_enforcement,
                 ProfileCategory::marketer, ProfileCategory::healthcare, ProfileCategory::other}) {
    if (to_string(c) == s) return c;
  }
  throw Error(Errc::decode_error, "unknown profile category: " + std::string(s));
}

ValueKind parse_value_kind(std::string_view s) {
  if (s == "numeric") return ValueKind::numeric;
  if (s == "categorical") return ValueKind::categorical;
  throw Error(Errc::decode_error, "unknown value kind: " + std::string(s));
}

BenefitCategory parse_benefit_category(std::string_view s) {
  for (auto c : {BenefitCategory::financial, BenefitCategory::social, BenefitCategory::societal}) {
    if (to_string(c) == s) return c;
  }
  throw Error(Errc::unknown_benefit_category, std::string(s));
}

Outcome parse_outcome(std::string_view s) {
  if (s == "Answer") return Outcome::answer;
  if (s == "Deny") return Outcome::deny;
  throw Error(Errc::decode_error, "unknown outcome: " + std::string(s));
}

}  // namespace pdv
