#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdv/core/json.hpp"
#include "pdv/core/types.hpp"

namespace pdv::sim {

/// Offsets from the start of a trace, [start, end).
struct Interval {
  Duration start{0};
  Duration end{0};
  bool operator==(const Interval&) const = default;
};

/// Duty cycle: on for `on`, off for `off`, first switching on at `phase`.
struct Periodic {
  Duration on{0};
  Duration off{0};
  Duration phase{0};
  bool operator==(const Periodic&) const = default;
};

/// An appliance is drawing power when inside its schedule (always when the
/// schedule is empty) and, if periodic, in the on part of its cycle.
struct ApplianceSignature {
  std::string name;
  double power_kw = 0.0;
  std::vector<Interval> schedule;
  std::optional<Periodic> periodic;
  bool operator==(const ApplianceSignature&) const = default;
};

struct Home {
  std::string name;
  Timestamp start{};
  Duration duration{0};
  std::uint64_t seed = 0;
  /// Jitter standard deviation as a fraction of the mean draw.
  double jitter = 0.01;
  std::vector<ApplianceSignature> appliances;
  bool operator==(const Home&) const = default;
};

/// Throws invalid-argument on negative power, non-positive cycle lengths or
/// overlapping schedule intervals.
void validate(const ApplianceSignature& signature);

void to_json(Json& j, const Interval& i);
void from_json(const Json& j, Interval& i);
void to_json(Json& j, const ApplianceSignature& a);
void from_json(const Json& j, ApplianceSignature& a);
void to_json(Json& j, const Home& h);
void from_json(const Json& j, Home& h);
Home load_home(const std::string& path);

struct TimeInterval {
  Timestamp start{};
  Timestamp end{};
  bool operator==(const TimeInterval&) const = default;
};

/// Appliance name to the merged intervals it was drawing power.
using GroundTruth = std::map<std::string, std::vector<TimeInterval>>;

struct Trace {
  Duration period{0};
  /// Mean power in kW over each sampling window, stamped at its start.
  std::vector<Reading> readings;
  GroundTruth truth;
  /// Standard deviation of the added jitter in kW.
  double sigma = 0.0;
};

/// Samples the aggregate draw every `period` over [start, start + duration).
/// `jitter` is sigma as a fraction of the mean clean draw. Throws
/// invalid-period when period <= 0.
Trace generate_trace(const std::vector<ApplianceSignature>& signatures, Timestamp start, Duration duration,
                     Duration period, double jitter, std::uint64_t seed);
Trace generate_trace(const Home& home, Duration period);

/// FNV-1a over the JSON lines of the readings.
std::uint64_t checksum(const std::vector<Reading>& readings);

struct Detection {
  std::string appliance;
  std::vector<TimeInterval> intervals;
  /// Fraction of the true on-time covered by `intervals`.
  double confidence = 0.0;
};

/// Step-change matcher: a rise (fall) between consecutive samples within 10%
/// of an appliance's draw switches it on (off); it also switches off once the
/// level falls below 60% of the draw above the level before the rise. An
/// unmatched rise covers one sample. Recall is measured against `truth`.
std::vector<Detection> naive_detect(const std::vector<Reading>& readings, Duration period,
                                    const std::vector<ApplianceSignature>& signatures, const GroundTruth& truth);

}  // namespace pdv::sim
