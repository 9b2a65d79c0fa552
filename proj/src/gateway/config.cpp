#include "pdv/gateway/config.hpp"

#include <fstream>

#include "pdv/core/error.hpp"
#include "pdv/infer/rules.hpp"

namespace pdv::gateway {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, path.string() + ": " + e.what());
  }
}

/// Inline object or a path to a JSON file holding it.
Json inline_or_file(const Json& j, const std::filesystem::path& base) {
  return j.is_string() ? read_json(resolve(base, j.get<std::string>())) : j;
}

}  // namespace

Config parse_config(const Json& j, const std::filesystem::path& base) {
  Config c;
  try {
    c.state_dir = resolve(base, j.value("state_dir", std::string("state")));
    c.owner = j.value("owner", std::string("owner"));
    c.owner_token = j.at("owner_token").get<std::string>();
    for (const auto& entry : j.value("consumers", Json::array())) {
      c.consumers.push_back({decode<Consumer>(entry), entry.at("token").get<std::string>()});
    }
    for (const auto& entry : j.value("devices", Json::array())) {
      c.devices.push_back({entry.at("id").get<std::string>(), entry.at("token").get<std::string>()});
    }
    c.streams = decode<std::vector<Stream>>(j.value("streams", Json::array()));
    for (const auto& p : j.value("rules", std::vector<std::string>{})) {
      for (auto& r : infer::load_rules(resolve(base, p).string()).rules) {
        if (c.rules.find(r.id)) throw Error(Errc::duplicate_rule, r.id + " appears in more than one rule file");
        c.rules.rules.push_back(std::move(r));
      }
    }
    if (j.contains("binding")) c.binding = inline_or_file(j["binding"], base).get<infer::RiskBinding>();
    for (const auto& p : j.value("context_facts", std::vector<std::string>{})) {
      for (auto& f : infer::load_facts(resolve(base, p).string())) c.context_facts.push_back(std::move(f));
    }
    if (j.contains("calibration")) c.calibration = decode<tradeoff::LeakageCalibration>(inline_or_file(j["calibration"], base));
    c.policy = decode<OwnerPolicy>(inline_or_file(j.at("policy"), base));
    c.auto_accept = j.value("auto_accept", false);
    c.value_bounds = j.value("value_bounds", std::map<std::string, double>{});
    c.seed = j.value("seed", std::uint64_t{0});
    c.max_depth = j.value("max_depth", infer::kDefaultMaxDepth);
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, std::string("config: ") + e.what());
  }
  if (const auto violations = validate_policy(c.policy); !violations.empty()) {
    throw Error(Errc::invalid_policy, violations.front().path + ": " + violations.front().message);
  }
  infer::validate_binding(c.binding, c.rules);
  if (c.owner_token.empty()) throw Error(Errc::invalid_argument, "owner_token must not be empty");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  return parse_config(read_json(path), path.parent_path());
}

}  // namespace pdv::gateway
