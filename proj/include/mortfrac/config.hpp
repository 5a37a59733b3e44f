#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mortfrac/calibrate.hpp"
#include "mortfrac/estimate.hpp"
#include "mortfrac/model.hpp"
#include "mortfrac/pricing.hpp"

namespace mortfrac {

struct SimulationControls {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 20250731;
  Scheme scheme = Scheme::Exponential;
  int start_week = 1;
};

struct IoPaths {
  std::string stmf;
  std::string fred;
  std::string aligned;
  std::string out = "out";
  std::string country = "USA";
};

struct EstimationControls {
  double long_term_mean_rate = 4.18;
  HurstInput hurst_input = HurstInput::Levels;
  AlphaSigmaMethod alpha_sigma = AlphaSigmaMethod::Moment;
  RhoNormalization rho_norm = RhoNormalization::PerYear;
  int first_year = 2015;
  int last_year = 2024;
  std::vector<int> baseline_years{2015, 2016, 2017, 2018, 2019};
};

struct RunConfig {
  std::string command;
  ModelParams model;
  RiskPremiums premiums{3.8701, 1.0620, 0.0, 0.0};
  BondSpec bond;
  bool bond_points_given = false;  // attachment/exhaustion set explicitly
  MarketQuote quote;
  SimulationControls sim;
  IoPaths io;
  EstimationControls est;
  AttachmentRule attachment_rule = AttachmentRule::PerPathMax;
  Measure loss_measure = Measure::Physical;
  std::string scenario = "all";

  void validate() const;
};

/// The calibrated 2015-2024 setup: estimated model parameters, premiums (3.8701, 1.0620),
/// 5-year annual-pay bond on the yearly average index, r0 = 4.30%.
RunConfig baseline_config();

RunConfig parse_config(const std::string& toml_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

struct ParamOverride {
  std::string field;  // model or premium field name
  double value = 0.0;
  bool multiply = false;
};

struct ScenarioSpec {
  int id = 0;
  std::string description;
  std::vector<ParamOverride> overrides;
};

/// Scenarios 1-6: rho = 0; H1 = H2 = 0.5; sigma1^2 doubled; sigma2^2 doubled; gamma1 x1.5; gamma2 x1.5.
std::vector<ScenarioSpec> standard_scenarios();
void apply_scenario(const ScenarioSpec& s, ModelParams& p, RiskPremiums& rp);

std::string to_string(Scheme s);
std::string to_string(AttachmentRule r);
std::string to_string(Measure m);

}  // namespace mortfrac
