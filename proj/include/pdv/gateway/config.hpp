#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdv/core/json.hpp"
#include "pdv/core/types.hpp"
#include "pdv/infer/engine.hpp"
#include "pdv/tradeoff/tradeoff.hpp"

namespace pdv::gateway {

struct ConsumerAccount {
  Consumer consumer;
  std::string token;
};

struct DeviceAccount {
  std::string id;
  std::string token;
};

/// Everything a vault is started with. Relative paths in the file are
/// resolved against the directory holding it.
struct Config {
  std::filesystem::path state_dir;
  /// Subject of device events, e.g. useDevice(<owner>, <device>).
  std::string owner = "owner";
  std::string owner_token;
  std::vector<ConsumerAccount> consumers;
  std::vector<DeviceAccount> devices;
  std::vector<Stream> streams;
  infer::RuleSet rules;
  infer::RiskBinding binding;
  std::vector<Fact> context_facts;
  tradeoff::LeakageCalibration calibration = tradeoff::LeakageCalibration::defaults();
  OwnerPolicy policy;
  /// Apply the engine's recommendation without waiting for the owner.
  bool auto_accept = false;
  std::map<std::string, double> value_bounds;
  std::uint64_t seed = 0;
  int max_depth = infer::kDefaultMaxDepth;
};

/// Reads and validates a config file. Throws decode-error, io-error,
/// invalid-policy or the errors of the rule and fact parsers.
Config load_config(const std::filesystem::path& path);
Config parse_config(const Json& j, const std::filesystem::path& base_dir);

}  // namespace pdv::gateway
