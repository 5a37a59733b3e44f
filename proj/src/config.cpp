#include "mortfrac/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <toml.hpp>

#include "mortfrac/data.hpp"
#include "mortfrac/errors.hpp"

namespace mortfrac {

std::string to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "exponential"; }
std::string to_string(AttachmentRule r) { return r == AttachmentRule::PerPathMax ? "per_path_max" : "pooled"; }
std::string to_string(Measure m) { return m == Measure::Pricing ? "pricing" : "physical"; }

namespace {

Scheme scheme_from(const std::string& s) {
  if (s == "exponential") return Scheme::Exponential;
  if (s == "euler") return Scheme::Euler;
  throw FormatError("unknown scheme: " + s);
}
AttachmentRule attachment_from(const std::string& s) {
  if (s == "pooled") return AttachmentRule::Pooled;
  if (s == "per_path_max") return AttachmentRule::PerPathMax;
  throw FormatError("unknown attachment rule: " + s);
}
Measure measure_from(const std::string& s) {
  if (s == "physical") return Measure::Physical;
  if (s == "pricing") return Measure::Pricing;
  throw FormatError("unknown measure: " + s);
}
HurstInput hurst_input_from(const std::string& s) {
  if (s == "levels") return HurstInput::Levels;
  if (s == "increments") return HurstInput::Increments;
  throw FormatError("unknown hurst input: " + s);
}
AlphaSigmaMethod alpha_sigma_from(const std::string& s) {
  if (s == "moment") return AlphaSigmaMethod::Moment;
  if (s == "as_printed") return AlphaSigmaMethod::AsPrinted;
  throw FormatError("unknown alpha/sigma method: " + s);
}
RhoNormalization rho_norm_from(const std::string& s) {
  if (s == "per_year") return RhoNormalization::PerYear;
  if (s == "as_printed") return RhoNormalization::AsPrinted;
  throw FormatError("unknown rho normalisation: " + s);
}

class Reader {
 public:
  explicit Reader(const toml::table& t) : t_(t) {}

  void num(const char* sec, const char* key, double& out) const {
    const auto node = t_[sec][key];
    if (!node) return;
    if (const auto v = node.value<double>()) {
      out = *v;
      return;
    }
    throw FormatError(std::string("config: ") + sec + "." + key + " must be a number");
  }
  template <class I>
  void integer(const char* sec, const char* key, I& out) const {
    const auto node = t_[sec][key];
    if (!node) return;
    const auto v = node.value<std::int64_t>();
    if (!v || *v < 0) throw FormatError(std::string("config: ") + sec + "." + key + " must be a nonnegative integer");
    out = static_cast<I>(*v);
  }
  void str(const char* sec, const char* key, std::string& out) const {
    const auto node = t_[sec][key];
    if (!node) return;
    const auto v = node.value<std::string>();
    if (!v) throw FormatError(std::string("config: ") + sec + "." + key + " must be a string");
    out = *v;
  }
  bool has(const char* sec, const char* key) const { return static_cast<bool>(t_[sec][key]); }
  const toml::table& table() const { return t_; }

 private:
  const toml::table& t_;
};

}  // namespace

void RunConfig::validate() const {
  model.validate();
  quote.validate();
  BondSpec b = bond;
  if (!bond_points_given) {
    b.attachment = 0.0;
    b.exhaustion = 1.0;
  }
  b.validate();
  if (sim.n_paths < 1) throw DomainError("simulation.n_paths must be positive");
  if (sim.start_week < 1 || sim.start_week > 52) throw DomainError("simulation.start_week must lie in 1..52");
}

RunConfig baseline_config() {
  RunConfig c;
  c.bond.face = 100.0;
  c.bond.coupon_rate = 0.03;
  c.bond.pay_freq = 1;
  c.bond.term = 5.0;
  c.bond.index_rule = IndexRule::AnnualAverage;
  return c;
}

RunConfig parse_config(const std::string& toml_text) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error: " << e.description() << " at line " << e.source().begin.line;
    throw FormatError(os.str());
  }
  const Reader r(tbl);
  RunConfig c = baseline_config();
  r.str("run", "command", c.command);
  r.str("run", "scenario", c.scenario);

  auto& m = c.model;
  r.num("model", "h1", m.h1);
  r.num("model", "h2", m.h2);
  r.num("model", "alpha1", m.alpha1);
  r.num("model", "alpha2", m.alpha2);
  r.num("model", "sigma1", m.sigma1);
  r.num("model", "sigma2", m.sigma2);
  r.num("model", "m1", m.m1);
  r.num("model", "m2", m.m2);
  r.num("model", "theta1", m.theta1);
  r.num("model", "theta2", m.theta2);
  r.num("model", "rho", m.rho);
  r.num("model", "r0", m.r0);
  r.num("model", "mu0", m.mu0);

  r.num("premiums", "gamma1", c.premiums.gamma1);
  r.num("premiums", "gamma2", c.premiums.gamma2);
  r.num("premiums", "eta1", c.premiums.eta1);
  r.num("premiums", "eta2", c.premiums.eta2);

  r.num("bond", "face", c.bond.face);
  r.num("bond", "coupon_rate", c.bond.coupon_rate);
  r.integer("bond", "pay_freq", c.bond.pay_freq);
  r.num("bond", "term", c.bond.term);
  const bool has_a = r.has("bond", "attachment"), has_b = r.has("bond", "exhaustion");
  if (has_a != has_b) throw FormatError("config: bond.attachment and bond.exhaustion must be given together");
  if (has_a) {
    r.num("bond", "attachment", c.bond.attachment);
    r.num("bond", "exhaustion", c.bond.exhaustion);
    c.bond_points_given = true;
  }
  std::string rule = to_string(c.bond.index_rule);
  r.str("bond", "index_rule", rule);
  c.bond.index_rule = index_rule_from_string(rule);

  r.num("quote", "prob_first_loss", c.quote.prob_first_loss);
  r.num("quote", "expected_loss", c.quote.expected_loss);
  r.num("quote", "coupon_obs", c.quote.coupon_obs);
  r.num("quote", "term", c.quote.term);
  r.num("quote", "target_yield", c.quote.target_yield);
  if (r.has("quote", "premium_spread")) {
    double ps = 0.0;
    r.num("quote", "premium_spread", ps);
    c.quote.premium_spread = ps;
  }

  r.integer("simulation", "n_paths", c.sim.n_paths);
  r.integer("simulation", "seed", c.sim.seed);
  r.integer("simulation", "start_week", c.sim.start_week);
  std::string scheme = to_string(c.sim.scheme);
  r.str("simulation", "scheme", scheme);
  c.sim.scheme = scheme_from(scheme);
  std::string arule = to_string(c.attachment_rule);
  r.str("simulation", "attachment_rule", arule);
  c.attachment_rule = attachment_from(arule);
  std::string lm = to_string(c.loss_measure);
  r.str("simulation", "loss_measure", lm);
  c.loss_measure = measure_from(lm);

  r.str("io", "stmf", c.io.stmf);
  r.str("io", "fred", c.io.fred);
  r.str("io", "aligned", c.io.aligned);
  r.str("io", "out", c.io.out);
  r.str("io", "country", c.io.country);

  r.num("estimation", "long_term_mean_rate", c.est.long_term_mean_rate);
  std::string hi = c.est.hurst_input == HurstInput::Levels ? "levels" : "increments";
  r.str("estimation", "hurst_input", hi);
  c.est.hurst_input = hurst_input_from(hi);
  std::string as = c.est.alpha_sigma == AlphaSigmaMethod::Moment ? "moment" : "as_printed";
  r.str("estimation", "alpha_sigma", as);
  c.est.alpha_sigma = alpha_sigma_from(as);
  std::string rn = c.est.rho_norm == RhoNormalization::PerYear ? "per_year" : "as_printed";
  r.str("estimation", "rho_normalization", rn);
  c.est.rho_norm = rho_norm_from(rn);
  r.integer("estimation", "first_year", c.est.first_year);
  r.integer("estimation", "last_year", c.est.last_year);
  if (const auto* arr = tbl["estimation"]["baseline_years"].as_array()) {
    c.est.baseline_years.clear();
    for (const auto& el : *arr) {
      const auto v = el.value<std::int64_t>();
      if (!v) throw FormatError("config: estimation.baseline_years must hold integers");
      c.est.baseline_years.push_back(static_cast<int>(*v));
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string serialize_config(const RunConfig& c) {
  if (c.sim.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    throw DomainError("seed does not fit a TOML integer");
  toml::table run{{"command", c.command}, {"scenario", c.scenario}};
  const auto& m = c.model;
  toml::table model{{"h1", m.h1},         {"h2", m.h2},         {"alpha1", m.alpha1}, {"alpha2", m.alpha2},
                    {"sigma1", m.sigma1}, {"sigma2", m.sigma2}, {"m1", m.m1},         {"m2", m.m2},
                    {"theta1", m.theta1}, {"theta2", m.theta2}, {"rho", m.rho},       {"r0", m.r0},
                    {"mu0", m.mu0}};
  toml::table premiums{{"gamma1", c.premiums.gamma1},
                       {"gamma2", c.premiums.gamma2},
                       {"eta1", c.premiums.eta1},
                       {"eta2", c.premiums.eta2}};
  toml::table bond{{"face", c.bond.face},
                   {"coupon_rate", c.bond.coupon_rate},
                   {"pay_freq", static_cast<std::int64_t>(c.bond.pay_freq)},
                   {"term", c.bond.term},
                   {"index_rule", to_string(c.bond.index_rule)}};
  if (c.bond_points_given) {
    bond.insert("attachment", c.bond.attachment);
    bond.insert("exhaustion", c.bond.exhaustion);
  }
  toml::table quote{{"prob_first_loss", c.quote.prob_first_loss},
                    {"expected_loss", c.quote.expected_loss},
                    {"coupon_obs", c.quote.coupon_obs},
                    {"term", c.quote.term},
                    {"target_yield", c.quote.target_yield}};
  if (c.quote.premium_spread) quote.insert("premium_spread", *c.quote.premium_spread);
  toml::table sim{{"n_paths", static_cast<std::int64_t>(c.sim.n_paths)},
                  {"seed", static_cast<std::int64_t>(c.sim.seed)},
                  {"start_week", static_cast<std::int64_t>(c.sim.start_week)},
                  {"scheme", to_string(c.sim.scheme)},
                  {"attachment_rule", to_string(c.attachment_rule)},
                  {"loss_measure", to_string(c.loss_measure)}};
  toml::table io{{"stmf", c.io.stmf}, {"fred", c.io.fred}, {"aligned", c.io.aligned}, {"out", c.io.out}, {"country", c.io.country}};
  toml::array years;
  for (int y : c.est.baseline_years) years.push_back(static_cast<std::int64_t>(y));
  toml::table est{{"long_term_mean_rate", c.est.long_term_mean_rate},
                  {"hurst_input", c.est.hurst_input == HurstInput::Levels ? "levels" : "increments"},
                  {"alpha_sigma", c.est.alpha_sigma == AlphaSigmaMethod::Moment ? "moment" : "as_printed"},
                  {"rho_normalization", c.est.rho_norm == RhoNormalization::PerYear ? "per_year" : "as_printed"},
                  {"first_year", static_cast<std::int64_t>(c.est.first_year)},
                  {"last_year", static_cast<std::int64_t>(c.est.last_year)},
                  {"baseline_years", years}};
  toml::table root{{"run", run},   {"model", model}, {"premiums", premiums}, {"bond", bond},
                   {"quote", quote}, {"simulation", sim}, {"io", io},          {"estimation", est}};
  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

std::vector<ScenarioSpec> standard_scenarios() {
  const double r2 = std::sqrt(2.0);
  return {
      {1, "rho = 0", {{"rho", 0.0, false}}},
      {2, "H1 = H2 = 0.5", {{"h1", 0.5, false}, {"h2", 0.5, false}}},
      {3, "sigma1^2 doubled", {{"sigma1", r2, true}}},
      {4, "sigma2^2 doubled", {{"sigma2", r2, true}}},
      {5, "gamma1 x 1.5", {{"gamma1", 1.5, true}}},
      {6, "gamma2 x 1.5", {{"gamma2", 1.5, true}}},
  };
}

void apply_scenario(const ScenarioSpec& s, ModelParams& p, RiskPremiums& rp) {
  for (const auto& o : s.overrides) {
    double* target = nullptr;
    if (o.field == "h1") target = &p.h1;
    else if (o.field == "h2") target = &p.h2;
    else if (o.field == "alpha1") target = &p.alpha1;
    else if (o.field == "alpha2") target = &p.alpha2;
    else if (o.field == "sigma1") target = &p.sigma1;
    else if (o.field == "sigma2") target = &p.sigma2;
    else if (o.field == "m1") target = &p.m1;
    else if (o.field == "m2") target = &p.m2;
    else if (o.field == "theta1") target = &p.theta1;
    else if (o.field == "theta2") target = &p.theta2;
    else if (o.field == "rho") target = &p.rho;
    else if (o.field == "r0") target = &p.r0;
    else if (o.field == "mu0") target = &p.mu0;
    else if (o.field == "gamma1") target = &rp.gamma1;
    else if (o.field == "gamma2") target = &rp.gamma2;
    else if (o.field == "eta1") target = &rp.eta1;
    else if (o.field == "eta2") target = &rp.eta2;
    if (!target) throw FormatError("unknown scenario field: " + o.field);
    *target = o.multiply ? *target * o.value : o.value;
  }
}

}  // namespace mortfrac
