#include "pdv/tradeoff/tradeoff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pdv/core/error.hpp"

namespace pdv::tradeoff {
namespace {

ParameterCalibration two_points(long p1, double c1, long p2, double c2, bool uncalibrated) {
  return ParameterCalibration{{{Duration{p1}, c1}, {Duration{p2}, c2}}, uncalibrated};
}

std::string fmt(double v) { return format_number(v); }

void check_policy(const OwnerPolicy& policy, const Environment& env) {
  if (const auto violations = validate_policy(policy, env.registry); !violations.empty()) {
    std::string detail;
    for (const auto& v : violations) detail += (detail.empty() ? "" : "; ") + v.message;
    throw Error(Errc::invalid_policy, detail);
  }
}

}  // namespace

LeakageCalibration LeakageCalibration::defaults() {
  LeakageCalibration c;
  c.parameters[std::string(kDeviceUse)] = two_points(15, 0.72, 1800, 0.02, false);
  c.parameters[std::string(kHabits)] = two_points(15, 0.59, 1800, 0.02, false);
  c.parameters[std::string(kPresenceAbsence)] = two_points(15, 0.95, 1800, 0.30, true);
  c.parameters[std::string(kRealtimeSurveillance)] = two_points(15, 0.95, 3600, 0.05, true);
  c.parameters[std::string(kPersonalInformation)] = two_points(15, 0.50, 1800, 0.02, true);
  return c;
}

void LeakageCalibration::validate() const {
  for (const auto& [name, cal] : parameters) {
    const auto& pts = cal.points;
    if (pts.size() < 2) throw Error(Errc::invalid_calibration, name + ": at least two points required");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].period.count() <= 0) throw Error(Errc::invalid_calibration, name + ": periods must be positive");
      if (!(pts[i].confidence >= 0 && pts[i].confidence <= 1)) {
        throw Error(Errc::invalid_calibration, name + ": confidence outside [0,1]");
      }
      if (i == 0) continue;
      if (pts[i].period <= pts[i - 1].period) {
        throw Error(Errc::invalid_calibration, name + ": periods must strictly increase");
      }
      if (pts[i].confidence > pts[i - 1].confidence) {
        throw Error(Errc::invalid_calibration, name + ": confidence increases with period");
      }
    }
  }
}

void to_json(Json& j, const LeakageCalibration& c) {
  j = Json::object();
  for (const auto& [name, cal] : c.parameters) {
    Json points = Json::array();
    for (const auto& p : cal.points) points.push_back({{"period", encode_duration(p.period)}, {"confidence", p.confidence}});
    if (cal.uncalibrated) j[name] = {{"points", points}, {"uncalibrated", true}};
    else j[name] = points;
  }
}

void from_json(const Json& j, LeakageCalibration& c) {
  if (!j.is_object()) throw_decode_error("calibration must be an object");
  c.parameters.clear();
  for (const auto& [name, value] : j.items()) {
    ParameterCalibration cal;
    const Json* points = &value;
    if (value.is_object()) {
      points = &value.at("points");
      cal.uncalibrated = value.value("uncalibrated", false);
    }
    if (!points->is_array()) throw_decode_error(name + ": points must be an array");
    for (const auto& p : *points) {
      cal.points.push_back({decode_duration(p.at("period")), p.at("confidence").get<double>()});
    }
    c.parameters.emplace(name, std::move(cal));
  }
  c.validate();
}

LeakageCalibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, path + ": " + e.what());
  }
  return decode<LeakageCalibration>(j);
}

double sensitivity(const std::set<std::string>& parameters, const OwnerPolicy& policy, const ContextState& context) {
  double total = 0;
  for (const auto& p : parameters) {
    auto w = policy.parameter_weights.find(p);
    if (w == policy.parameter_weights.end()) throw Error(Errc::unknown_parameter, p + " has no weight");
    auto f = context.flags.find(p);
    if (f == context.flags.end()) throw Error(Errc::unknown_parameter, p + " has no context flag");
    total += w->second * f->second;
  }
  return total;
}

double trust(const Consumer& consumer, const OwnerPolicy& policy) {
  if (consumer.ratings.empty()) return policy.default_trust;
  return std::accumulate(consumer.ratings.begin(), consumer.ratings.end(), 0.0) /
         static_cast<double>(consumer.ratings.size());
}

double leakage(const std::string& parameter, Duration sample_period, const LeakageCalibration& cal) {
  auto it = cal.parameters.find(parameter);
  if (it == cal.parameters.end() || it->second.points.empty()) throw Error(Errc::uncalibrated_parameter, parameter);
  const auto& pts = it->second.points;
  if (sample_period <= pts.front().period) return pts.front().confidence;
  if (sample_period >= pts.back().period) return pts.back().confidence;
  auto hi = std::find_if(pts.begin(), pts.end(), [&](const CalibrationPoint& p) { return p.period >= sample_period; });
  if (hi->period == sample_period) return hi->confidence;
  const auto lo = hi - 1;
  const double x = std::log(static_cast<double>(sample_period.count()));
  const double x0 = std::log(static_cast<double>(lo->period.count()));
  const double x1 = std::log(static_cast<double>(hi->period.count()));
  return lo->confidence + (hi->confidence - lo->confidence) * (x - x0) / (x1 - x0);
}

double noise_factor(std::optional<double> noise_epsilon) {
  constexpr double kReferenceEpsilon = 1.0;
  if (!noise_epsilon) return 1.0;
  return std::min(1.0, *noise_epsilon / kReferenceEpsilon);
}

double benefit_value(const BenefitOffer& offer, const OwnerPolicy& policy) {
  const std::string category(to_string(offer.category));
  auto it = policy.benefit_multipliers.find(category);
  if (it == policy.benefit_multipliers.end()) throw Error(Errc::unknown_benefit_category, category);
  return offer.declared_value * it->second;
}

double utility(double b, double r, double w) {
  if (r < 0) throw Error(Errc::precondition_violation, "risk magnitude must be non-negative");
  return (1 - w) * b - w * r;
}

Outcome outcome_for(double u) { return u > 0 ? Outcome::answer : Outcome::deny; }

std::set<Fact> release_facts(const std::string& item) {
  return {Fact{"isShared", {StringLit{item}, StringLit{"true"}}}};
}

RiskAssessment assess_risk(const query::Query& q, const Consumer& consumer, const OwnerPolicy& policy,
                           const ContextState& context, const Environment& env) {
  RiskAssessment base;
  for (const auto& item : q.items) {
    const auto inference = infer::infer_risks(release_facts(item), context, env.rules, env.binding, env.max_depth);
    ItemRisk risk;
    risk.item = item;
    for (const auto& p : inference.parameters) risk.parameters.push_back(ParameterRisk{p, 0, 0, 0});
    for (const auto& f : inference.risk_facts) {
      std::string text = infer::render(infer::explain(f, inference.saturation));
      if (std::find(base.derivations.begin(), base.derivations.end(), text) == base.derivations.end()) {
        base.derivations.push_back(std::move(text));
      }
    }
    base.items.push_back(std::move(risk));
  }
  return reassess(base, q, consumer, policy, context, env);
}

RiskAssessment reassess(const RiskAssessment& base, const query::Query& q, const Consumer& consumer,
                        const OwnerPolicy& policy, const ContextState& context, const Environment& env) {
  RiskAssessment out = base;
  out.sample_period = query::effective_period(q, env.streams);
  out.noise_epsilon = q.noise_epsilon;
  out.trust = trust(consumer, policy);
  const double scale = noise_factor(q.noise_epsilon);
  double total = 0;
  for (auto& item : out.items) {
    std::set<std::string> names;
    for (const auto& p : item.parameters) names.insert(p.parameter);
    item.sensitivity = sensitivity(names, policy, context);
    for (auto& pr : item.parameters) {
      pr.weight = policy.parameter_weights.at(pr.parameter);
      pr.context_flag = context.flags.at(pr.parameter);
      pr.leakage = leakage(pr.parameter, out.sample_period, env.calibration) * scale;
      total += pr.weight * pr.context_flag * pr.leakage;
    }
  }
  out.risk_magnitude = (1 - out.trust) * total;
  return out;
}

DecisionRecord decide(const query::Query& q, const Consumer& consumer, const BenefitOffer& offer,
                      const OwnerPolicy& policy, const ContextState& context, const Environment& env, Timestamp now,
                      std::string id) {
  check_policy(policy, env);
  return decide(assess_risk(q, consumer, policy, context, env), q, consumer, offer, policy, env, now, std::move(id));
}

DecisionRecord decide(const RiskAssessment& assessment, const query::Query& q, const Consumer& consumer,
                      const BenefitOffer& offer, const OwnerPolicy& policy, const Environment& env, Timestamp now,
                      std::string id) {
  check_policy(policy, env);
  DecisionRecord d;
  d.id = std::move(id);
  d.query = query::print_query(q);
  d.consumer_id = consumer.id;
  d.timestamp = now;
  d.assessment = assessment;
  d.risk_magnitude = d.assessment.risk_magnitude;
  d.benefit = benefit_value(offer, policy);
  d.tradeoff_bias_w = policy.tradeoff_bias_w;
  d.utility = utility(d.benefit, d.risk_magnitude, d.tradeoff_bias_w);
  d.outcome = outcome_for(d.utility);
  d.degradation = Degradation{d.assessment.sample_period, q.noise_epsilon};
  d.explanation.push_back("U = (1 - " + fmt(d.tradeoff_bias_w) + ") * " + fmt(d.benefit) + " - " +
                          fmt(d.tradeoff_bias_w) + " * " + fmt(d.risk_magnitude) + " = " + fmt(d.utility) + " -> " +
                          std::string(to_string(d.outcome)));
  for (const auto& item : d.assessment.items) {
    for (const auto& p : item.parameters) {
      d.explanation.push_back(item.item + ": " + p.parameter + " weight " + fmt(p.weight) + " flag " +
                              std::to_string(p.context_flag) + " leakage " + fmt(p.leakage));
    }
  }
  for (const auto& text : d.assessment.derivations) d.explanation.push_back(text);
  return d;
}

std::vector<Duration> degradation_ladder(const query::Query& q, const std::vector<Stream>& streams) {
  query::Query native_q = q;
  native_q.sample_period.reset();
  const Duration native = query::effective_period(native_q, streams);
  const Duration requested = query::effective_period(q, streams);
  std::vector<Duration> out;
  for (Duration step : {native, Duration{60}, Duration{300}, Duration{900}, Duration{1800}, Duration{3600}}) {
    if (step > requested && step.count() % native.count() == 0 &&
        std::find(out.begin(), out.end(), step) == out.end()) {
      out.push_back(step);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Degradation> min_degradation(const query::Query& q, const Consumer& consumer, const BenefitOffer& offer,
                                           const OwnerPolicy& policy, const ContextState& context,
                                           const Environment& env) {
  check_policy(policy, env);
  const auto base = assess_risk(q, consumer, policy, context, env);
  if (decide(base, q, consumer, offer, policy, env).outcome == Outcome::answer) {
    throw Error(Errc::precondition_violation, "query is already answered at the requested accuracy");
  }
  for (Duration step : degradation_ladder(q, env.streams)) {
    query::Query candidate = q;
    candidate.sample_period = step;
    const auto a = reassess(base, candidate, consumer, policy, context, env);
    if (decide(a, candidate, consumer, offer, policy, env).outcome == Outcome::answer) {
      return Degradation{step, q.noise_epsilon};
    }
  }
  return std::nullopt;
}

}  // namespace pdv::tradeoff
