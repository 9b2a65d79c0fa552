#pragma once

// Canonical JSON encodings of the core domain types. Field names follow the
// snake_case type field names; timestamps are RFC 3339 UTC strings and
// durations are "15s" / "30m" / "1h" strings.

#include <json.hpp>

#include "pdv/core/fact.hpp"
#include "pdv/core/types.hpp"

namespace pdv {

using Json = nlohmann::json;

void to_json(Json& j, const Term& t);
void from_json(const Json& j, Term& t);
void to_json(Json& j, const Atom& a);
void from_json(const Json& j, Atom& a);

void to_json(Json& j, const PrivacyParameter& p);
void from_json(const Json& j, PrivacyParameter& p);
void to_json(Json& j, const OwnerPolicy& p);
void from_json(const Json& j, OwnerPolicy& p);
void to_json(Json& j, const ContextState& c);
void from_json(const Json& j, ContextState& c);
void to_json(Json& j, const Consumer& c);
void from_json(const Json& j, Consumer& c);
void to_json(Json& j, const Stream& s);
void from_json(const Json& j, Stream& s);
void to_json(Json& j, const Reading& r);
void from_json(const Json& j, Reading& r);
void to_json(Json& j, const BenefitOffer& b);
void from_json(const Json& j, BenefitOffer& b);
void to_json(Json& j, const ParameterRisk& p);
void from_json(const Json& j, ParameterRisk& p);
void to_json(Json& j, const ItemRisk& i);
void from_json(const Json& j, ItemRisk& i);
void to_json(Json& j, const RiskAssessment& r);
void from_json(const Json& j, RiskAssessment& r);
void to_json(Json& j, const Degradation& d);
void from_json(const Json& j, Degradation& d);
void to_json(Json& j, const DecisionRecord& d);
void from_json(const Json& j, DecisionRecord& d);

Json encode_timestamp(Timestamp t);
Timestamp decode_timestamp(const Json& j);
Json encode_duration(Duration d);
Duration decode_duration(const Json& j);

[[noreturn]] void throw_decode_error(const std::string& what);

/// Decodes `T` from JSON, converting library exceptions into decode-error.
template <typename T>
T decode(const Json& j) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_decode_error(e.what());
  }
}

}  // namespace pdv
