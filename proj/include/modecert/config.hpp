#pragma once

// Certifier settings from a key = value file, e.g.
//
//   epsilon = 0.05
//   alpha_pw = 0.02        ; alpha_pw, alpha_r and alpha_u go together
//   alpha_r = 0.015
//   alpha_u = 0.015
//   pairwise_delta0 = 0.25
//   pairwise_grid = 0.125, 0.25, 0.5  ; strictly increasing
//   pairwise_weights = 0.3, 0.3, 0.4   ; optional, uniform otherwise
//   lcb_grid = 0.25, 1, 4
//   lcb_weights = ...
//
// Lines starting with ';' or '#' are comments. Unknown keys are rejected.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modecert/certifier.hpp"

namespace modecert {

struct CertifierSettings {
  std::optional<double> epsilon;
  std::optional<double> alpha_pw;
  std::optional<double> alpha_r;
  std::optional<double> alpha_u;
  std::optional<double> pairwise_delta0;
  std::vector<double> pairwise_grid;
  std::vector<double> pairwise_weights;
  std::vector<double> lcb_grid;
  std::vector<double> lcb_weights;
};

/// Throws ConfigError with the source name on bad input.
CertifierSettings parse_settings(std::istream& in, const std::string& source);
CertifierSettings load_settings(const std::filesystem::path& path);

/// Overwrites the budget and grids of config with whatever settings define.
/// An explicit pairwise_grid wins over pairwise_delta0.
void apply_settings(const CertifierSettings& settings, CertifierConfig& config);

}  // namespace modecert
