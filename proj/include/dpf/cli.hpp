// Command implementations behind the dpf binary: gen-data, train, sample,
// autoencode, eval, interpolate. Exit codes: 0 ok, 2 usage, 3 data,
// 4 numeric failure.
#pragma once

#include <string>
#include <vector>

#include "dpf/io.hpp"

namespace dpf {

// Full effective configuration with repo defaults; flags override file
// values, file values override these.
Config default_config();

ModelConfig model_config_from(const Config& cfg);
TrainConfig train_config_from(const Config& cfg);

// Keys that must match between a checkpoint and a resume config.
bool model_keys_match(const Config& a, const Config& b, std::string* mismatch);

// argv-style entry point (without the program name).
int run_cli(const std::vector<std::string>& args);

}  // namespace dpf
