#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdv/core/json.hpp"
#include "pdv/core/types.hpp"
#include "pdv/infer/engine.hpp"
#include "pdv/query/query.hpp"

namespace pdv::tradeoff {

struct CalibrationPoint {
  Duration period{0};
  double confidence = 0.0;
  bool operator==(const CalibrationPoint&) const = default;
};

struct ParameterCalibration {
  std::vector<CalibrationPoint> points;
  /// Placeholder numbers not backed by a measurement study.
  bool uncalibrated = false;
  bool operator==(const ParameterCalibration&) const = default;
};

/// Confidence with which each parameter can be inferred from data sampled at a
/// given period.
struct LeakageCalibration {
  std::map<std::string, ParameterCalibration> parameters;
  bool operator==(const LeakageCalibration&) const = default;

  /// The shipped defaults for the five canonical parameters.
  static LeakageCalibration defaults();
  /// Throws invalid-calibration: fewer than 2 points, periods not strictly
  /// increasing, confidences outside [0,1] or increasing with period.
  void validate() const;
};

/// Accepts `{"param": [{"period": "15s", "confidence": 0.72}, ...]}` where a
/// value may also be `{"points": [...], "uncalibrated": true}`.
LeakageCalibration load_calibration(const std::string& path);
void to_json(Json& j, const LeakageCalibration& c);
void from_json(const Json& j, LeakageCalibration& c);

/// Sum of weight * context flag over `parameters`. Throws unknown-parameter.
double sensitivity(const std::set<std::string>& parameters, const OwnerPolicy& policy, const ContextState& context);

/// Mean rating, or the policy's default trust without ratings.
double trust(const Consumer& consumer, const OwnerPolicy& policy);

/// Log-linear interpolation between calibration points, clamped to the
/// endpoint confidences. Throws uncalibrated-parameter.
double leakage(const std::string& parameter, Duration sample_period, const LeakageCalibration& cal);

/// Scale applied to leakage for noise-degraded data: min(1, epsilon / 1.0).
double noise_factor(std::optional<double> noise_epsilon);

/// declared_value * multiplier. Throws unknown-benefit-category.
double benefit_value(const BenefitOffer& offer, const OwnerPolicy& policy);

/// (1 - w) * b - w * r. Throws precondition-violation when r < 0.
double utility(double b, double r, double w);

/// Answer iff u > 0.
Outcome outcome_for(double u);

/// Everything a decision needs besides the query and its parties.
struct Environment {
  infer::RuleSet rules;
  infer::RiskBinding binding;
  LeakageCalibration calibration = LeakageCalibration::defaults();
  std::vector<Stream> streams;
  ParameterRegistry registry;
  int max_depth = infer::kDefaultMaxDepth;
};

/// Facts describing the release of one item: isShared("<item>", "true").
std::set<Fact> release_facts(const std::string& item);

/// Per item, the parameters inferable from its release in `context`, each
/// weighted by policy and context and scaled by leakage at the query accuracy.
RiskAssessment assess_risk(const query::Query& q, const Consumer& consumer, const OwnerPolicy& policy,
                           const ContextState& context, const Environment& env);

/// `base` recomputed for another accuracy, consumer, policy or flag setting.
/// Only valid while the query items and the context facts are unchanged.
RiskAssessment reassess(const RiskAssessment& base, const query::Query& q, const Consumer& consumer,
                        const OwnerPolicy& policy, const ContextState& context, const Environment& env);

/// Runs inference, risk, benefit and utility. Throws invalid-policy,
/// unknown-stream and errors of the components.
DecisionRecord decide(const query::Query& q, const Consumer& consumer, const BenefitOffer& offer,
                      const OwnerPolicy& policy, const ContextState& context, const Environment& env,
                      Timestamp now = {}, std::string id = {});

/// Same, from an assessment already made for `q`.
DecisionRecord decide(const RiskAssessment& assessment, const query::Query& q, const Consumer& consumer,
                      const BenefitOffer& offer, const OwnerPolicy& policy, const Environment& env,
                      Timestamp now = {}, std::string id = {});

/// Native period of the query plus 1m, 5m, 15m, 30m, 1h: the steps coarser
/// than the requested period that are multiples of the native one.
std::vector<Duration> degradation_ladder(const query::Query& q, const std::vector<Stream>& streams);

/// Smallest ladder step at which the decision becomes Answer; nullopt when
/// none does. Throws precondition-violation when `q` is already answered.
std::optional<Degradation> min_degradation(const query::Query& q, const Consumer& consumer, const BenefitOffer& offer,
                                           const OwnerPolicy& policy, const ContextState& context,
                                           const Environment& env);

}  // namespace pdv::tradeoff
