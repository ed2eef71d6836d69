#pragma once

// Batch pipeline behind the command-line subcommands. Every stage reads and
// writes CSV files so it can be rerun from serialized intermediates.

#include <filesystem>
#include <string>
#include <vector>

#include "cssm/config.hpp"
#include "cssm/model.hpp"
#include "cssm/sampler.hpp"

namespace cssm {

const ConfigFile::Schema& config_schema();

/// [model] section: either scenario = 1|2|3 or explicit families/tau_obs/latent_family/tau_lat
/// (explicit keys override the scenario values).
ModelParams model_from_config(const ConfigFile& cfg);
/// [sampler] section.
SamplerConfig sampler_from_config(const ConfigFile& cfg);
std::vector<FamilyKind> family_set_from_config(const ConfigFile& cfg);

void write_draws(const std::filesystem::path& dir, const PosteriorDraws& draws, bool with_latent = true);
/// Rebuilds draws from draws.csv and latent.csv in dir (diagnostics are not restored).
PosteriorDraws read_draws(const std::filesystem::path& dir);

void cmd_simulate(const ConfigFile& cfg, const std::filesystem::path& out);
void cmd_fit(const ConfigFile& cfg, const std::filesystem::path& out);
void cmd_predict(const ConfigFile& cfg, const std::filesystem::path& out);
void cmd_score(const ConfigFile& cfg, const std::filesystem::path& out);
void cmd_contours(const ConfigFile& cfg, const std::filesystem::path& out);

}  // namespace cssm
