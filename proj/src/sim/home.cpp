#include "pdv/sim/home.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "pdv/core/error.hpp"

namespace pdv::sim {
namespace {

using Span = std::pair<long long, long long>;  // seconds from the start, [first, second)

std::vector<Span> clip_merge(std::vector<Span> spans, long long limit) {
  for (auto& s : spans) {
    s.first = std::max(0LL, s.first);
    s.second = std::min(limit, s.second);
  }
  spans.erase(std::remove_if(spans.begin(), spans.end(), [](const Span& s) { return s.first >= s.second; }),
              spans.end());
  std::sort(spans.begin(), spans.end());
  std::vector<Span> out;
  for (const auto& s : spans) {
    if (!out.empty() && s.first <= out.back().second) out.back().second = std::max(out.back().second, s.second);
    else out.push_back(s);
  }
  return out;
}

std::vector<Span> intersect(const std::vector<Span>& a, const std::vector<Span>& b) {
  std::vector<Span> out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      const long long lo = std::max(x.first, y.first), hi = std::min(x.second, y.second);
      if (lo < hi) out.push_back({lo, hi});
    }
  }
  return clip_merge(std::move(out), std::numeric_limits<long long>::max());
}

std::vector<Span> on_spans(const ApplianceSignature& a, long long limit) {
  std::vector<Span> scheduled;
  if (a.schedule.empty()) scheduled.push_back({0, limit});
  for (const auto& i : a.schedule) scheduled.push_back({i.start.count(), i.end.count()});
  scheduled = clip_merge(std::move(scheduled), limit);
  if (!a.periodic) return scheduled;
  const long long on = a.periodic->on.count(), cycle = on + a.periodic->off.count();
  const long long phase = a.periodic->phase.count();
  std::vector<Span> cycles;
  long long k = -((phase + cycle - 1) / cycle);
  for (long long s = phase + k * cycle; s < limit; s += cycle) cycles.push_back({s, s + on});
  return intersect(scheduled, clip_merge(std::move(cycles), limit));
}

long long overlap(const std::vector<Span>& spans, long long lo, long long hi) {
  long long total = 0;
  auto it = std::upper_bound(spans.begin(), spans.end(), Span{lo, std::numeric_limits<long long>::max()});
  if (it != spans.begin()) --it;
  for (; it != spans.end() && it->first < hi; ++it) {
    const long long a = std::max(lo, it->first), b = std::min(hi, it->second);
    if (a < b) total += b - a;
  }
  return total;
}

double open_unit(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  const double u1 = open_unit(rng), u2 = open_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

long long ms(const TimeInterval& t) { return (t.end - t.start).count(); }

}  // namespace

void validate(const ApplianceSignature& a) {
  if (!(a.power_kw >= 0)) throw Error(Errc::invalid_argument, a.name + ": power must be non-negative");
  auto sorted = a.schedule;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& x, const Interval& y) { return x.start < y.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].end <= sorted[i].start) throw Error(Errc::invalid_argument, a.name + ": empty schedule interval");
    if (i && sorted[i].start < sorted[i - 1].end) {
      throw Error(Errc::invalid_argument, a.name + ": overlapping schedule intervals");
    }
  }
  if (a.periodic && (a.periodic->on.count() <= 0 || a.periodic->off.count() < 0)) {
    throw Error(Errc::invalid_argument, a.name + ": invalid duty cycle");
  }
}

void to_json(Json& j, const Interval& i) {
  j = Json{{"start", encode_duration(i.start)}, {"end", encode_duration(i.end)}};
}

void from_json(const Json& j, Interval& i) {
  i.start = decode_duration(j.at("start"));
  i.end = decode_duration(j.at("end"));
}

void to_json(Json& j, const ApplianceSignature& a) {
  j = Json{{"name", a.name}, {"power_kw", a.power_kw}, {"schedule", a.schedule}};
  if (a.periodic) {
    j["periodic"] = {{"on", encode_duration(a.periodic->on)},
                     {"off", encode_duration(a.periodic->off)},
                     {"phase", encode_duration(a.periodic->phase)}};
  }
}

void from_json(const Json& j, ApplianceSignature& a) {
  a.name = j.at("name").get<std::string>();
  a.power_kw = j.at("power_kw").get<double>();
  a.schedule = j.value("schedule", std::vector<Interval>{});
  a.periodic.reset();
  if (j.contains("periodic")) {
    const Json& p = j["periodic"];
    a.periodic = Periodic{decode_duration(p.at("on")), decode_duration(p.at("off")),
                          p.contains("phase") ? decode_duration(p["phase"]) : Duration{0}};
  }
  validate(a);
}

void to_json(Json& j, const Home& h) {
  j = Json{{"name", h.name},
           {"start", encode_timestamp(h.start)},
           {"duration", encode_duration(h.duration)},
           {"seed", h.seed},
           {"jitter", h.jitter},
           {"appliances", h.appliances}};
}

void from_json(const Json& j, Home& h) {
  h.name = j.at("name").get<std::string>();
  h.start = decode_timestamp(j.at("start"));
  h.duration = decode_duration(j.at("duration"));
  h.seed = j.value("seed", std::uint64_t{0});
  h.jitter = j.value("jitter", 0.01);
  h.appliances = j.at("appliances").get<std::vector<ApplianceSignature>>();
}

Home load_home(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  try {
    return decode<Home>(Json::parse(in));
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, path + ": " + e.what());
  }
}

Trace generate_trace(const std::vector<ApplianceSignature>& signatures, Timestamp start, Duration duration,
                     Duration period, double jitter, std::uint64_t seed) {
  if (period.count() <= 0) throw Error(Errc::invalid_period, "period must be positive");
  const long long limit = duration.count(), step = period.count();
  Trace out;
  out.period = period;
  std::vector<std::vector<Span>> spans;
  double energy = 0;  // kW * s
  for (const auto& a : signatures) {
    validate(a);
    spans.push_back(on_spans(a, limit));
    auto& truth = out.truth[a.name];
    for (const auto& s : spans.back()) {
      energy += a.power_kw * static_cast<double>(s.second - s.first);
      truth.push_back({start + std::chrono::seconds{s.first}, start + std::chrono::seconds{s.second}});
    }
  }
  out.sigma = limit > 0 ? jitter * energy / static_cast<double>(limit) : 0.0;
  std::mt19937_64 rng(seed);
  for (long long t = 0; t < limit; t += step) {
    const long long end = std::min(limit, t + step);
    double value = 0;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      value += signatures[i].power_kw * static_cast<double>(overlap(spans[i], t, end)) / static_cast<double>(end - t);
    }
    if (out.sigma > 0) value += out.sigma * standard_normal(rng);
    out.readings.push_back(Reading{start + std::chrono::seconds{t}, value});
  }
  return out;
}

Trace generate_trace(const Home& home, Duration period) {
  return generate_trace(home.appliances, home.start, home.duration, period, home.jitter, home.seed);
}

std::uint64_t checksum(const std::vector<Reading>& readings) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& r : readings) {
    for (unsigned char c : Json(r).dump() + "\n") {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::vector<Detection> naive_detect(const std::vector<Reading>& readings, Duration period,
                                    const std::vector<ApplianceSignature>& signatures, const GroundTruth& truth) {
  constexpr double kTolerance = 0.10;
  // The level must stay this far above the pre-rise baseline.
  constexpr double kHoldFraction = 0.6;
  std::vector<Detection> out;
  if (readings.empty()) return out;
  for (const auto& a : signatures) {
    if (!(a.power_kw > 0)) continue;
    Detection d;
    d.appliance = a.name;
    bool on = false;
    Timestamp on_at{};
    double baseline = 0;
    for (std::size_t k = 1; k < readings.size(); ++k) {
      const double prev = std::get<double>(readings[k - 1].value);
      const double cur = std::get<double>(readings[k].value);
      const double delta = cur - prev;
      const Timestamp t = readings[k].timestamp;
      if (!on && std::abs(delta - a.power_kw) <= kTolerance * a.power_kw) {
        on = true;
        on_at = t;
        baseline = prev;
      } else if (on && (std::abs(delta + a.power_kw) <= kTolerance * a.power_kw ||
                        cur < baseline + kHoldFraction * a.power_kw)) {
        d.intervals.push_back({on_at, t});
        on = false;
      }
    }
    if (on) d.intervals.push_back({on_at, on_at + period});
    long long covered = 0, total = 0;
    if (auto it = truth.find(a.name); it != truth.end()) {
      for (const auto& t : it->second) {
        total += ms(t);
        for (const auto& x : d.intervals) {
          const auto lo = std::max(t.start, x.start), hi = std::min(t.end, x.end);
          if (lo < hi) covered += (hi - lo).count();
        }
      }
    }
    d.confidence = total > 0 ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace pdv::sim
