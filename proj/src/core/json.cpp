#include "pdv/core/json.hpp"

#include <cstdio>
#include <cstdlib>

#include "pdv/core/error.hpp"

namespace pdv {

void throw_decode_error(const std::string& what) { throw Error(Errc::decode_error, what); }

Json encode_timestamp(Timestamp t) { return format_rfc3339(t); }

Timestamp decode_timestamp(const Json& j) {
  if (!j.is_string()) throw_decode_error("timestamp must be an RFC 3339 string");
  return parse_rfc3339(j.get<std::string>());
}

Json encode_duration(Duration d) { return format_duration(d); }

Duration decode_duration(const Json& j) {
  if (!j.is_string()) throw_decode_error("duration must be a string such as \"15s\"");
  return parse_duration(j.get<std::string>());
}

namespace {

template <typename T>
Json encode_optional(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> decode_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(Json& j, const Term& t) {
  struct Visitor {
    Json operator()(const Variable& v) const { return Json{{"var", v.name}}; }
    Json operator()(const Constant& c) const { return c.name; }
    Json operator()(const StringLit& s) const { return Json{{"str", s.value}}; }
    Json operator()(const NumberLit& n) const { return n.value; }
    Json operator()(const Skolem& s) const {
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(s.frame));
      return Json{{"skolem", {{"rule", s.rule}, {"frame", hex}, {"position", s.position}}}};
    }
  };
  j = std::visit(Visitor{}, t);
}

void from_json(const Json& j, Term& t) {
  if (j.is_string()) {
    t = Constant{j.get<std::string>()};
  } else if (j.is_number()) {
    t = NumberLit{j.get<double>()};
  } else if (j.is_object() && j.contains("str")) {
    t = StringLit{j.at("str").get<std::string>()};
  } else if (j.is_object() && j.contains("var")) {
    t = Variable{j.at("var").get<std::string>()};
  } else if (j.is_object() && j.contains("skolem")) {
    const auto& s = j.at("skolem");
    const auto hex = s.at("frame").get<std::string>();
    t = Skolem{s.at("rule").get<std::string>(), std::strtoull(hex.c_str(), nullptr, 16),
               s.at("position").get<int>()};
  } else {
    throw_decode_error("unrecognised term encoding: " + j.dump());
  }
}

void to_json(Json& j, const Atom& a) { j = Json{{"predicate", a.predicate}, {"args", a.args}}; }

void from_json(const Json& j, Atom& a) {
  a.predicate = j.at("predicate").get<std::string>();
  a.args = j.at("args").get<std::vector<Term>>();
}

void to_json(Json& j, const PrivacyParameter& p) {
  j = Json{{"id", p.id}, {"description", p.description}};
}

void from_json(const Json& j, PrivacyParameter& p) {
  p.id = j.at("id").get<std::string>();
  p.description = j.value("description", "");
}

void to_json(Json& j, const OwnerPolicy& p) {
  j = Json{{"parameter_weights", p.parameter_weights},
           {"tradeoff_bias_w", p.tradeoff_bias_w},
           {"benefit_multipliers", p.benefit_multipliers},
           {"default_trust", p.default_trust}};
}

void from_json(const Json& j, OwnerPolicy& p) {
  p.parameter_weights = j.at("parameter_weights").get<std::map<std::string, double>>();
  p.tradeoff_bias_w = j.at("tradeoff_bias_w").get<double>();
  p.benefit_multipliers = j.at("benefit_multipliers").get<std::map<std::string, double>>();
  p.default_trust = j.at("default_trust").get<double>();
}

void to_json(Json& j, const ContextState& c) {
  j = Json{{"flags", c.flags}, {"active_facts", c.active_facts}, {"device_raised", c.device_raised}};
}

void from_json(const Json& j, ContextState& c) {
  c.flags = j.at("flags").get<std::map<std::string, int>>();
  for (const auto& [k, v] : c.flags) {
    if (v != 0 && v != 1) throw_decode_error("context flag must be 0 or 1: " + k);
  }
  c.active_facts = j.at("active_facts").get<std::set<Fact>>();
  c.device_raised = j.contains("device_raised")
                        ? j.at("device_raised").get<std::map<std::string, std::vector<std::string>>>()
                        : std::map<std::string, std::vector<std::string>>{};
}

void to_json(Json& j, const Consumer& c) {
  j = Json{{"id", c.id},
           {"display_name", c.display_name},
           {"profile_category", to_string(c.profile_category)},
           {"ratings", c.ratings}};
}

void from_json(const Json& j, Consumer& c) {
  c.id = j.at("id").get<std::string>();
  c.display_name = j.value("display_name", c.id);
  c.profile_category = parse_profile_category(j.value("profile_category", "other"));
  c.ratings = j.value("ratings", std::vector<double>{});
  for (double r : c.ratings) {
    if (!(r >= 0.0 && r <= 1.0)) throw_decode_error("rating out of range for consumer " + c.id);
  }
}

void to_json(Json& j, const Stream& s) {
  j = Json{{"id", s.id},
           {"unit", s.unit},
           {"native_period", encode_duration(s.native_period)},
           {"value_kind", to_string(s.value_kind)}};
}

void from_json(const Json& j, Stream& s) {
  s.id = j.at("id").get<std::string>();
  s.unit = j.value("unit", "");
  s.native_period = decode_duration(j.at("native_period"));
  s.value_kind = parse_value_kind(j.value("value_kind", "numeric"));
}

void to_json(Json& j, const Reading& r) {
  j = Json{{"t", encode_timestamp(r.timestamp)}};
  if (const double* d = std::get_if<double>(&r.value)) {
    j["v"] = *d;
  } else {
    j["v"] = std::get<std::string>(r.value);
  }
}

void from_json(const Json& j, Reading& r) {
  r.timestamp = decode_timestamp(j.at("t"));
  const auto& v = j.at("v");
  if (v.is_number()) {
    r.value = v.get<double>();
  } else if (v.is_string()) {
    r.value = v.get<std::string>();
  } else {
    throw_decode_error("reading value must be a number or a string");
  }
}

void to_json(Json& j, const BenefitOffer& b) {
  j = Json{{"category", to_string(b.category)},
           {"declared_value", b.declared_value},
           {"description", b.description}};
}

void from_json(const Json& j, BenefitOffer& b) {
  b.category = parse_benefit_category(j.at("category").get<std::string>());
  b.declared_value = j.at("declared_value").get<double>();
  if (!(b.declared_value >= 0.0)) throw_decode_error("declared_value must be non-negative");
  b.description = j.value("description", "");
}

void to_json(Json& j, const ParameterRisk& p) {
  j = Json{{"parameter", p.parameter},
           {"weight", p.weight},
           {"context_flag", p.context_flag},
           {"leakage", p.leakage}};
}

void from_json(const Json& j, ParameterRisk& p) {
  p.parameter = j.at("parameter").get<std::string>();
  p.weight = j.at("weight").get<double>();
  p.context_flag = j.at("context_flag").get<int>();
  p.leakage = j.at("leakage").get<double>();
}

void to_json(Json& j, const ItemRisk& i) {
  j = Json{{"item", i.item}, {"sensitivity", i.sensitivity}, {"parameters", i.parameters}};
}

void from_json(const Json& j, ItemRisk& i) {
  i.item = j.at("item").get<std::string>();
  i.sensitivity = j.at("sensitivity").get<double>();
  i.parameters = j.at("parameters").get<std::vector<ParameterRisk>>();
}

void to_json(Json& j, const RiskAssessment& r) {
  j = Json{{"items", r.items},
           {"trust", r.trust},
           {"sample_period", encode_duration(r.sample_period)},
           {"noise_epsilon", encode_optional(r.noise_epsilon)},
           {"risk_magnitude", r.risk_magnitude},
           {"derivations", r.derivations}};
}

void from_json(const Json& j, RiskAssessment& r) {
  r.items = j.at("items").get<std::vector<ItemRisk>>();
  r.trust = j.at("trust").get<double>();
  r.sample_period = decode_duration(j.at("sample_period"));
  r.noise_epsilon = decode_optional<double>(j, "noise_epsilon");
  r.risk_magnitude = j.at("risk_magnitude").get<double>();
  r.derivations = j.at("derivations").get<std::vector<std::string>>();
}

void to_json(Json& j, const Degradation& d) {
  j = Json{{"sample_period", encode_duration(d.sample_period)},
           {"noise_epsilon", encode_optional(d.noise_epsilon)}};
}

void from_json(const Json& j, Degradation& d) {
  d.sample_period = decode_duration(j.at("sample_period"));
  d.noise_epsilon = decode_optional<double>(j, "noise_epsilon");
}

void to_json(Json& j, const DecisionRecord& d) {
  j = Json{{"id", d.id},
           {"query", d.query},
           {"consumer_id", d.consumer_id},
           {"benefit", d.benefit},
           {"risk_magnitude", d.risk_magnitude},
           {"tradeoff_bias_w", d.tradeoff_bias_w},
           {"utility", d.utility},
           {"outcome", to_string(d.outcome)},
           {"degradation", d.degradation},
           {"timestamp", encode_timestamp(d.timestamp)},
           {"explanation", d.explanation},
           {"assessment", d.assessment}};
}

void from_json(const Json& j, DecisionRecord& d) {
  d.id = j.at("id").get<std::string>();
  d.query = j.at("query").get<std::string>();
  d.consumer_id = j.at("consumer_id").get<std::string>();
  d.benefit = j.at("benefit").get<double>();
  d.risk_magnitude = j.at("risk_magnitude").get<double>();
  d.tradeoff_bias_w = j.at("tradeoff_bias_w").get<double>();
  d.utility = j.at("utility").get<double>();
  d.outcome = parse_outcome(j.at("outcome").get<std::string>());
  d.degradation = j.at("degradation").get<Degradation>();
  d.timestamp = decode_timestamp(j.at("timestamp"));
  d.explanation = j.at("explanation").get<std::vector<std::string>>();
  d.assessment = j.at("assessment").get<RiskAssessment>();
}

}  // namespace pdv
