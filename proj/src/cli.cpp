#include "mortfrac/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mortfrac/calibrate.hpp"
#include "mortfrac/config.hpp"
#include "mortfrac/data.hpp"
#include "mortfrac/errors.hpp"
#include "mortfrac/estimate.hpp"
#include "mortfrac/model.hpp"
#include "mortfrac/numerics.hpp"
#include "mortfrac/pricing.hpp"

namespace fs = std::filesystem;

namespace mortfrac {

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError("table has no column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  if (cell == "NA") return std::nan("");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty()) throw FormatError("not a number in column " + name + ": '" + cell + "'");
  return v;
}

CsvTable parse_csv_table(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::string cur;
    bool quoted = false;
    for (char c : s) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') cur += c;
    }
    f.push_back(cur);
    return f;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw FormatError("empty table");
  return t;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return parse_csv_table(in);
}

namespace {

struct Flags {
  std::string config;
  std::string stmf, fred, input, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::string scenario;
  std::string rate_unit = "percent";
  std::string country;
  std::string index_rule, attachment_rule, scheme;
  std::optional<double> attachment, exhaustion, term;
  bool no_prf = false;
};

class Writer {
 public:
  Writer(const fs::path& dir, const std::string& name) : path_(dir / name), os_(path_, std::ios::binary) {
    if (!os_) throw FormatError("cannot write " + path_.string());
  }
  std::ostream& stream() { return os_; }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return fmt_num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  fs::path path_;
  std::ofstream os_;
};

double rate_scale(const std::string& unit) {
  if (unit == "percent") return 1.0;
  if (unit == "decimal") return 100.0;
  throw FormatError("unknown rate unit: " + unit);
}

RunConfig resolve_config(const Flags& f, const std::string& command) {
  RunConfig c = f.config.empty() ? baseline_config() : load_config(f.config);
  c.command = command;
  const double s = rate_scale(f.rate_unit);
  c.model.m1 *= s;
  c.model.sigma1 *= s;
  c.model.r0 *= s;
  if (!f.stmf.empty()) c.io.stmf = f.stmf;
  if (!f.fred.empty()) c.io.fred = f.fred;
  if (!f.input.empty()) c.io.aligned = f.input;
  if (!f.out.empty()) c.io.out = f.out;
  if (!f.country.empty()) c.io.country = f.country;
  if (f.seed) c.sim.seed = *f.seed;
  if (f.paths) c.sim.n_paths = *f.paths;
  if (!f.scenario.empty()) c.scenario = f.scenario;
  if (!f.index_rule.empty()) c.bond.index_rule = index_rule_from_string(f.index_rule);
  if (!f.attachment_rule.empty()) {
    if (f.attachment_rule == "pooled") c.attachment_rule = AttachmentRule::Pooled;
    else if (f.attachment_rule == "per_path_max") c.attachment_rule = AttachmentRule::PerPathMax;
    else throw FormatError("unknown attachment rule: " + f.attachment_rule);
  }
  if (!f.scheme.empty()) {
    if (f.scheme == "exponential") c.sim.scheme = Scheme::Exponential;
    else if (f.scheme == "euler") c.sim.scheme = Scheme::Euler;
    else throw FormatError("unknown scheme: " + f.scheme);
  }
  if (f.attachment.has_value() != f.exhaustion.has_value())
    throw FormatError("--attachment and --exhaustion must be given together");
  if (f.attachment) {
    c.bond.attachment = *f.attachment;
    c.bond.exhaustion = *f.exhaustion;
    c.bond_points_given = true;
  }
  if (f.term) {
    c.bond.term = *f.term;
    c.quote.term = *f.term;
  }
  c.validate();
  return c;
}

fs::path out_dir(const RunConfig& c) {
  fs::path d(c.io.out);
  fs::create_directories(d);
  return d;
}

std::vector<double> baseline_curve(const RunConfig& c) {
  BaselineCurve b;
  if (c.io.stmf.empty()) {
    b = reference_seasonal_baseline();
  } else {
    b = build_baseline(parse_stmf_file(c.io.stmf, c.io.country), c.est.baseline_years);
  }
  return {b.expected_rate.begin(), b.expected_rate.end()};
}

PricingOptions pricing_options(const RunConfig& c, bool disable_prf = false) {
  PricingOptions o;
  o.sim.scheme = c.sim.scheme;
  o.start_week = c.sim.start_week;
  o.disable_prf = disable_prf;
  return o;
}

AlignedSeries load_aligned(const RunConfig& c) {
  if (!c.io.aligned.empty()) return read_aligned_file(c.io.aligned);
  if (c.io.stmf.empty() || c.io.fred.empty())
    throw FormatError("need --input (aligned series) or both --stmf and --fred");
  const auto records = parse_stmf_file(c.io.stmf, c.io.country);
  const auto baseline = build_baseline(records, c.est.baseline_years);
  const auto excess = excess_mortality(records, baseline);
  const auto rates = parse_fred_file(c.io.fred);
  AlignedSeries s = align_series(records, excess, rates, c.est.first_year, c.est.last_year);
  s.provenance["stmf_sha256"] = sha256_file(c.io.stmf);
  s.provenance["fred_sha256"] = sha256_file(c.io.fred);
  return s;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const RunConfig& c, std::ostream& out) {
  if (c.io.stmf.empty() || c.io.fred.empty()) throw FormatError("ingest needs --stmf and --fred");
  RunConfig cc = c;
  cc.io.aligned.clear();
  const AlignedSeries s = load_aligned(cc);
  const fs::path dir = out_dir(c);
  {
    Writer w(dir, "aligned.csv");
    write_aligned_csv(w.stream(), s);
  }
  {
    Writer w(dir, "provenance.json");
    w.stream() << provenance_json(s);
  }
  const auto filled = std::count(s.rate_filled.begin(), s.rate_filled.end(), true);
  out << "aligned weeks: " << s.weeks.size() << " (" << format_date(s.weeks.front()) << " to "
      << format_date(s.weeks.back()) << "), forward-filled rates: " << filled << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- estimate / calibrate-p

EstimationReport run_estimation(const RunConfig& c, const AlignedSeries& s) {
  ObservedSeries r{s.rate, 52.0, SeriesLabel::Rate};
  ObservedSeries mu{s.excess_mortality, 52.0, SeriesLabel::ExcessMortality};
  PhysicalOptions opt;
  opt.hurst_input = c.est.hurst_input;
  opt.alpha_sigma = c.est.alpha_sigma;
  opt.rho_norm = c.est.rho_norm;
  return calibrate_physical(r, mu, c.est.long_term_mean_rate, opt);
}

void print_table1(std::ostream& out, const EstimationReport& rep, double rate_div) {
  char buf[256];
  out << "            H          alpha      sigma      m          theta\n";
  std::snprintf(buf, sizeof buf, "r_t     %10.5f %10.5f %10.5f %10.5f %10.5f\n", rep.rate.h, rep.rate.alpha,
                rep.rate.sigma / rate_div, rep.rate.m / rate_div, rep.rate.theta);
  out << buf;
  std::snprintf(buf, sizeof buf, "mu_t    %10.5f %10.5f %10.5f %10.5f %10.5f\n", rep.mortality.h, rep.mortality.alpha,
                rep.mortality.sigma, rep.mortality.m, rep.mortality.theta);
  out << buf;
  std::snprintf(buf, sizeof buf, "rho     %10.5f%s\n", rep.rho.rho, rep.rho.clipped ? " (clipped)" : "");
  out << buf;
}

void write_estimation_files(const fs::path& dir, const EstimationReport& rep, double rate_div) {
  {
    Writer w(dir, "table1.csv");
    w.row("series", "H", "alpha", "sigma", "m", "theta", "rho");
    w.row("r", rep.rate.h, rep.rate.alpha, rep.rate.sigma / rate_div, rep.rate.m / rate_div, rep.rate.theta, rep.rho.rho);
    w.row("mu", rep.mortality.h, rep.mortality.alpha, rep.mortality.sigma, rep.mortality.m, rep.mortality.theta,
          rep.rho.rho);
  }
  Writer w(dir, "diagnostics.csv");
  w.row("series", "quantity", "x", "value");
  for (const auto* se : {&rep.rate, &rep.mortality}) {
    const std::string name = se == &rep.rate ? "r" : "mu";
    for (std::size_t i = 0; i < se->rs.block_sizes.size(); ++i)
      w.row(name, "log_rs_corrected", se->rs.block_sizes[i], se->rs.log_rs[i]);
    w.row(name, "rs_slope", 0.0, se->rs.slope);
    w.row(name, "rs_r_squared", 0.0, se->rs.r_squared);
    w.row(name, "hurst_clipped", 0.0, se->rs.clipped ? 1.0 : 0.0);
    w.row(name, "power_variation_v", 0.0, se->pv.v);
    w.row(name, "power_variation_u", 0.0, se->pv.u);
    w.row(name, "alpha_clipped", 0.0, se->alpha_clipped ? 1.0 : 0.0);
  }
  w.row("rho", "raw", 0.0, rep.rho.raw);
  w.row("rho", "n_obs", 0.0, static_cast<double>(rep.n_obs));
}

int cmd_estimate(const RunConfig& c, const Flags& f, std::ostream& out, bool write_params) {
  const AlignedSeries s = load_aligned(c);
  const EstimationReport rep = run_estimation(c, s);
  const double div = rate_scale(f.rate_unit);
  const fs::path dir = out_dir(c);
  print_table1(out, rep, div);
  write_estimation_files(dir, rep, div);
  if (write_params) {
    RunConfig pc = c;
    pc.command = "price-mls";
    auto& m = pc.model;
    m.h1 = rep.rate.h;
    m.alpha1 = rep.rate.alpha;
    m.sigma1 = rep.rate.sigma / div;
    m.m1 = rep.rate.m / div;
    m.theta1 = rep.rate.theta;
    m.h2 = rep.mortality.h;
    m.alpha2 = rep.mortality.alpha;
    m.sigma2 = rep.mortality.sigma;
    m.m2 = rep.mortality.m;
    m.theta2 = rep.mortality.theta;
    m.rho = rep.rho.rho;
    m.r0 = s.rate.back() / div;
    m.mu0 = s.excess_mortality.back();
    pc.io.aligned.clear();
    Writer w(dir, "physical.toml");
    w.stream() << serialize_config(pc);
    out << "parameters written to " << (dir / "physical.toml").string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- price-zcb

int cmd_price_zcb(const RunConfig& c, std::ostream& out) {
  const fs::path dir = out_dir(c);
  {
    Writer w(dir, "zcb.csv");
    w.row("T", "price_physical", "price_pricing", "yield_pricing");
    for (int k = 1; k <= 40; ++k) {
      const double T = 0.25 * k;
      const double pp = zcb_price_model(c.model, std::nullopt, T);
      const double pq = zcb_price_model(c.model, c.premiums, T);
      w.row(T, pp, pq, -std::log(pq) / T);
    }
  }
  {
    // Decimal-scaled family: m = 0.10, theta = 1, alpha = 0, r0 = 5%.
    Writer w(dir, "fig1.csv");
    w.row("sigma", "H", "T", "price");
    for (double sigma : {0.005, 0.01})
      for (double h : {0.5, 0.6, 0.7, 0.8, 0.9})
        for (int k = 1; k <= 100; ++k) {
          const double T = 0.1 * k;
          w.row(sigma, h, T, zcb_price_t0(0.10, 1.0, sigma, 0.0, h, 0.05, T));
        }
  }
  const double p5 = zcb_price_model(c.model, c.premiums, c.quote.term);
  char buf[160];
  std::snprintf(buf, sizeof buf, "P(0,%g) = %.6f under the pricing measure (yield %.4f%%)\n", c.quote.term, p5,
                100.0 * (std::pow(p5, -1.0 / c.quote.term) - 1.0));
  out << buf;
  return kExitOk;
}

// ---------------------------------------------------------------- price-mls

struct BondPoints {
  double a = 0.0, b = 0.0;
  bool calibrated = false;
};

BondPoints resolve_points(const RunConfig& c, std::span<const double> baseline) {
  if (c.bond_points_given) return {c.bond.attachment, c.bond.exhaustion, false};
  BondSpec spec = c.bond;
  spec.term = c.quote.term;
  std::optional<RiskPremiums> rp;
  if (c.loss_measure == Measure::Pricing) rp = c.premiums;
  const IndexSample sample = simulate_index_sample(c.model, rp, spec, baseline, c.sim.n_paths, c.sim.seed,
                                                   pricing_options(c));
  const double a = calibrate_attachment(sample, c.quote.prob_first_loss, c.attachment_rule);
  const double b = calibrate_exhaustion(sample, a, c.quote.expected_loss, c.quote.prob_first_loss);
  return {a, b, true};
}

struct BondEvaluation {
  double coupon = 0.0;
  LossMetrics loss;
};

BondEvaluation evaluate_bond(const RunConfig& c, const ModelParams& p, const RiskPremiums& rp, BondSpec spec,
                             std::span<const double> baseline, bool disable_prf) {
  BondEvaluation e;
  const CouponBatch batch =
      simulate_coupon_batch(p, rp, spec, baseline, c.sim.n_paths, c.sim.seed, pricing_options(c, disable_prf));
  e.coupon = coupon_from_batch(batch, spec.attachment, spec.exhaustion);
  std::optional<RiskPremiums> lrp;
  if (c.loss_measure == Measure::Pricing) lrp = rp;
  const IndexSample sample = simulate_index_sample(p, lrp, spec, baseline, c.sim.n_paths, c.sim.seed, pricing_options(c));
  std::vector<double> prfs(sample.n_paths);
  for (std::size_t i = 0; i < sample.n_paths; ++i) prfs[i] = prf(sample.row(i), spec.attachment, spec.exhaustion);
  e.loss = loss_metrics(prfs);
  if (disable_prf) e.loss = LossMetrics{};
  return e;
}

void write_histogram(const fs::path& dir, const PayoutDistribution& pd) {
  constexpr int kBins = 50;
  auto edges = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double l = *lo, h = *hi;
    if (h <= l) h = l + 1.0;
    return std::pair{l, h};
  };
  auto counts = [&](const std::vector<double>& v) {
    const auto [l, h] = edges(v);
    std::vector<std::size_t> n(kBins, 0);
    for (double x : v) {
      int k = static_cast<int>((x - l) / (h - l) * kBins);
      n[static_cast<std::size_t>(std::clamp(k, 0, kBins - 1))]++;
    }
    return n;
  };
  Writer w(dir, "histogram.csv");
  w.row("quantity", "bin_lo", "bin_hi", "count");
  for (const auto* v : {&pd.principal_pv, &pd.total_pv}) {
    const std::string name = v == &pd.principal_pv ? "principal" : "total";
    const auto [l, h] = edges(*v);
    const auto n = counts(*v);
    for (int k = 0; k < kBins; ++k)
      w.row(name, l + (h - l) * k / kBins, l + (h - l) * (k + 1) / kBins, n[static_cast<std::size_t>(k)]);
  }
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

int cmd_price_mls(const RunConfig& c, const Flags& f, std::ostream& out) {
  const auto baseline = baseline_curve(c);
  const BondPoints pts = resolve_points(c, baseline);
  BondSpec spec = c.bond;
  spec.attachment = pts.a;
  spec.exhaustion = pts.b;
  const BondEvaluation ev = evaluate_bond(c, c.model, c.premiums, spec, baseline, f.no_prf);

  BondSpec paid = spec;
  paid.coupon_rate = ev.coupon;
  PricingOptions po = pricing_options(c, f.no_prf);
  const PayoutDistribution pd = bond_payout_paths(c.model, std::nullopt, paid, baseline, c.sim.n_paths, c.sim.seed, po);
  const RiskReport principal = risk_measures(pd.principal_pv);
  const RiskReport total = risk_measures(pd.total_pv);
  const double zcb_T = zcb_price_model(c.model, c.premiums, spec.term);
  double annuity = 0.0;
  for (std::size_t k = 1; k <= spec.n_payments(); ++k)
    annuity += zcb_price_model(c.model, c.premiums, static_cast<double>(k) / spec.pay_freq) / spec.pay_freq;
  const double par = (1.0 - zcb_T) / annuity;

  const fs::path dir = out_dir(c);
  {
    Writer w(dir, "price_report.csv");
    w.row("key", "value");
    w.row("attachment", spec.attachment);
    w.row("exhaustion", spec.exhaustion);
    w.row("points_calibrated", pts.calibrated ? 1 : 0);
    w.row("fair_coupon", ev.coupon);
    w.row("par_yield", par);
    w.row("pfl", ev.loss.pfl);
    w.row("cel", ev.loss.cel ? *ev.loss.cel : std::nan(""));
    w.row("el", ev.loss.el);
    w.row("gamma1", c.premiums.gamma1);
    w.row("gamma2", c.premiums.gamma2);
    w.row("n_paths", c.sim.n_paths);
    w.row("seed", std::to_string(c.sim.seed));
  }
  {
    Writer w(dir, "risk.csv");
    w.row("quantity", "mean", "std", "var_5", "cte_5", "var_1", "cte_1");
    for (const auto* r : {&principal, &total})
      w.row(r == &principal ? "principal" : "total", r->mean, r->std, r->tails[0].var, r->tails[0].cte, r->tails[1].var,
            r->tails[1].cte);
  }
  write_histogram(dir, pd);
  {
    Writer w(dir, "maturity.csv");
    w.row("term", "coupon", "pfl", "cel", "el");
    for (int term = static_cast<int>(std::lround(spec.term)); term >= 1; --term) {
      BondSpec s2 = spec;
      s2.term = term;
      const BondEvaluation e2 = evaluate_bond(c, c.model, c.premiums, s2, baseline, f.no_prf);
      w.row(term, e2.coupon, e2.loss.pfl, e2.loss.cel ? *e2.loss.cel : std::nan(""), e2.loss.el);
    }
  }

  char buf[200];
  std::snprintf(buf, sizeof buf, "attachment %.6g  exhaustion %.6g%s\n", spec.attachment, spec.exhaustion,
                pts.calibrated ? "  (calibrated to the quote)" : "");
  out << buf;
  out << "fair coupon " << pct(ev.coupon) << "  par yield " << pct(par) << "\n";
  out << "PFL " << pct(ev.loss.pfl) << "  CEL " << (ev.loss.cel ? pct(*ev.loss.cel) : std::string("N/A")) << "  EL "
      << pct(ev.loss.el) << "\n";
  out << "             mean      std     VaR5%    CTE5%    VaR1%    CTE1%\n";
  for (const auto* r : {&principal, &total}) {
    std::snprintf(buf, sizeof buf, "%-10s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n", r == &principal ? "principal" : "total",
                  r->mean, r->std, r->tails[0].var, r->tails[0].cte, r->tails[1].var, r->tails[1].cte);
    out << buf;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- calibrate-q

int cmd_calibrate_q(const RunConfig& c, std::ostream& out) {
  const auto baseline = baseline_curve(c);
  QCalibrationOptions o;
  o.n_paths = c.sim.n_paths;
  o.seed = c.sim.seed;
  o.attachment_rule = c.attachment_rule;
  o.loss_measure = c.loss_measure;
  o.pricing = pricing_options(c);
  o.index_rule = c.bond.index_rule;
  o.pay_freq = c.bond.pay_freq;
  const CalibrationResult r = calibrate_q(c.model, c.quote, baseline, o);
  const fs::path dir = out_dir(c);
  {
    Writer w(dir, "calibration.csv");
    w.row("key", "value");
    w.row("gamma1", r.gamma1);
    w.row("gamma2", r.gamma2);
    w.row("attachment", r.attachment);
    w.row("exhaustion", r.exhaustion);
    w.row("achieved_pfl", r.achieved_pfl);
    w.row("achieved_el", r.achieved_el);
    w.row("achieved_coupon", r.achieved_coupon);
    w.row("gamma2_at_boundary", r.gamma2_at_boundary ? 1 : 0);
    w.row("n_paths", r.n_paths);
    w.row("seed", std::to_string(r.seed));
  }
  RunConfig qc = c;
  qc.command = "price-mls";
  qc.premiums.gamma1 = r.gamma1;
  qc.premiums.gamma2 = r.gamma2;
  qc.bond.attachment = r.attachment;
  qc.bond.exhaustion = r.exhaustion;
  qc.bond_points_given = true;
  {
    Writer w(dir, "calibrated.toml");
    w.stream() << serialize_config(qc);
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "gamma1 %.4f  gamma2 %.4f%s\nattachment %.6g  exhaustion %.6g\n", r.gamma1, r.gamma2,
                r.gamma2_at_boundary ? " (grid boundary)" : "", r.attachment, r.exhaustion);
  out << buf;
  out << "achieved PFL " << pct(r.achieved_pfl) << "  EL " << pct(r.achieved_el) << "  coupon "
      << pct(r.achieved_coupon) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sensitivity

int cmd_sensitivity(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto baseline = baseline_curve(c);
  const BondPoints pts = resolve_points(c, baseline);
  BondSpec spec = c.bond;
  spec.attachment = pts.a;
  spec.exhaustion = pts.b;

  std::vector<ScenarioSpec> chosen;
  const auto all = standard_scenarios();
  if (c.scenario == "all") {
    chosen = all;
  } else {
    int id = 0;
    try {
      id = std::stoi(c.scenario);
    } catch (const std::exception&) {
      throw FormatError("--scenario must be 1..6 or all");
    }
    if (id < 1 || id > 6) throw FormatError("--scenario must be 1..6 or all");
    chosen.push_back(all[static_cast<std::size_t>(id - 1)]);
  }

  const fs::path dir = out_dir(c);
  int status = kExitOk;
  struct Row {
    BondEvaluation e;
    RiskReport payout;
  };
  auto run = [&](const ModelParams& p, const RiskPremiums& rp) {
    Row r;
    r.e = evaluate_bond(c, p, rp, spec, baseline, false);
    BondSpec paid = spec;
    paid.coupon_rate = r.e.coupon;
    const auto pd = bond_payout_paths(p, std::nullopt, paid, baseline, c.sim.n_paths, c.sim.seed, pricing_options(c));
    r.payout = risk_measures(pd.total_pv);
    return r;
  };
  {
    Writer w(dir, "table5.csv");
    w.row("scenario", "description", "mean", "std", "var_5", "cte_5", "pfl", "cel", "el", "coupon");
    out << "scenario    mean     std   VaR5%   CTE5%     PFL      CEL      EL  coupon\n";
    auto emit = [&](int id, const std::string& desc, const Row& r) {
      const auto& t = r.payout.tails[0];
      const double cel = r.e.loss.cel ? *r.e.loss.cel : std::nan("");
      w.row(id, desc, r.payout.mean, r.payout.std, t.var, t.cte, r.e.loss.pfl, cel, r.e.loss.el, r.e.coupon);
      w.stream().flush();
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-8s %7.2f %7.2f %7.2f %7.2f %6.2f%% %7s %6.2f%% %6.2f%%\n",
                    id == 0 ? "base" : std::to_string(id).c_str(), r.payout.mean, r.payout.std, t.var, t.cte,
                    100 * r.e.loss.pfl, r.e.loss.cel ? pct(*r.e.loss.cel).c_str() : "N/A", 100 * r.e.loss.el,
                    100 * r.e.coupon);
      out << buf;
    };
    emit(0, "baseline", run(c.model, c.premiums));
    for (const auto& sc : chosen) {
      ModelParams p = c.model;
      RiskPremiums rp = c.premiums;
      apply_scenario(sc, p, rp);
      try {
        p.validate();
        emit(sc.id, sc.description, run(p, rp));
      } catch (const std::exception& ex) {
        err << "scenario " << sc.id << " failed: " << ex.what() << "\n";
        status = kExitSimulation;
      }
    }
  }

  // Coupon over an attachment x exhaustion grid, in multiples of the mean baseline rate.
  const double level = std::accumulate(baseline.begin(), baseline.end(), 0.0) / static_cast<double>(baseline.size());
  const CouponBatch batch =
      simulate_coupon_batch(c.model, c.premiums, spec, baseline, c.sim.n_paths, c.sim.seed, pricing_options(c));
  Writer w(dir, "heatmap.csv");
  w.row("attachment_multiple", "exhaustion_multiple", "attachment", "exhaustion", "coupon");
  for (int i = 0; i <= 12; ++i) {
    const double am = 1.2 + 0.05 * i;
    for (int j = 0; j <= 12; ++j) {
      const double bm = 1.3 + 0.1 * j;
      const double a = am * level, b = bm * level;
      w.row(am, bm, a, b, b > a ? coupon_from_batch(batch, a, b) : std::nan(""));
    }
  }
  return status;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const fs::path dir = out_dir(c);
  const std::size_t n_weeks = static_cast<std::size_t>(std::lround(c.bond.term * kWeeksPerYear));
  const double horizon = static_cast<double>(n_weeks) / kWeeksPerYear;
  SimOptions so;
  so.scheme = c.sim.scheme;
  {
    const PathSet ps = simulate_bivariate(c.model, std::nullopt, c.sim.n_paths, n_weeks, horizon, c.sim.seed, so);
    Writer w(dir, "fig3.csv");
    w.row("week", "t", "series", "q05", "q25", "q50", "q75", "q95", "mean");
    std::vector<double> col(ps.n_paths());
    for (std::size_t k = 0; k <= n_weeks; ++k) {
      for (const auto* mat : {&ps.rate_paths, &ps.mortality_paths}) {
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = (*mat)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        std::sort(col.begin(), col.end());
        w.row(k, static_cast<double>(k) / kWeeksPerYear, mat == &ps.rate_paths ? "rate" : "excess_mortality",
              num::quantile_linear_sorted(col, 0.05), num::quantile_linear_sorted(col, 0.25),
              num::quantile_linear_sorted(col, 0.5), num::quantile_linear_sorted(col, 0.75),
              num::quantile_linear_sorted(col, 0.95), num::mean(col));
      }
    }
  }
  {
    // Exceedance of the running maximum of excess mortality, common random numbers across H2.
    ModelParams f2 = c.model;
    f2.alpha2 = 0.0;
    f2.sigma2 = 0.116724;
    f2.m2 = 0.008818679;
    f2.theta2 = 1.029601;
    f2.mu0 = -0.085646188;
    Writer w(dir, "fig2.csv");
    w.row("H2", "threshold", "exceedance");
    for (double h : {0.6, 0.7, 0.8, 0.9}) {
      f2.h2 = h;
      auto sup = sample_mortality_sup(f2, c.sim.n_paths, n_weeks, horizon, c.sim.seed, so);
      std::sort(sup.begin(), sup.end());
      for (int k = 0; k <= 30; ++k) {
        const double x = 0.02 * k;
        const auto above = sup.end() - std::upper_bound(sup.begin(), sup.end(), x);
        w.row(h, x, static_cast<double>(above) / static_cast<double>(sup.size()));
      }
    }
  }
  {
    // One physical-measure path on the 2015-2024 weekly grid, in the aligned-series layout.
    const std::size_t n_obs = 522;
    const PathSet one = simulate_bivariate(c.model, std::nullopt, 1, n_obs - 1, (n_obs - 1) / 52.0, c.sim.seed, so);
    AlignedSeries s;
    const auto start = iso_week_monday({2015, 1});
    for (std::size_t k = 0; k < n_obs; ++k) {
      s.weeks.push_back(start + std::chrono::days{7 * static_cast<long>(k)});
      s.excess_mortality.push_back(one.mortality_paths(0, static_cast<Eigen::Index>(k)));
      s.rate.push_back(one.rate_paths(0, static_cast<Eigen::Index>(k)));
      s.rate_filled.push_back(false);
    }
    Writer w(dir, "synthetic_aligned.csv");
    write_aligned_csv(w.stream(), s);
  }
  out << "wrote fig3.csv, fig2.csv and synthetic_aligned.csv to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mortality-linked bond pricing under mixed fractional Brownian motion", "mortfrac"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "TOML run configuration");
  app.add_option("--stmf", f.stmf, "STMF weekly mortality CSV");
  app.add_option("--fred", f.fred, "FRED weekly rate CSV");
  app.add_option("--input", f.input, "aligned series CSV");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--paths", f.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  app.add_option("--scenario", f.scenario, "1..6 or all");
  app.add_option("--rate-unit", f.rate_unit, "unit of rate parameters")->check(CLI::IsMember({"percent", "decimal"}));
  app.add_option("--country", f.country, "STMF country code");
  app.add_option("--index-rule", f.index_rule, "point, annual_average or annual_max");
  app.add_option("--attachment-rule", f.attachment_rule, "pooled or per_path_max");
  app.add_option("--scheme", f.scheme, "exponential or euler");
  app.add_option("--attachment", f.attachment, "attachment point");
  app.add_option("--exhaustion", f.exhaustion, "exhaustion point");
  app.add_option("--term", f.term, "bond term in years");
  app.add_flag("--no-prf", f.no_prf, "price without mortality losses");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"ingest", "align STMF and FRED files into a weekly series"},
      {"estimate", "estimate physical parameters (Table 1 layout)"},
      {"price-zcb", "closed-form zero-coupon bond prices"},
      {"price-mls", "fair coupon, loss metrics and payout risk measures"},
      {"calibrate-p", "estimate physical parameters and write a config"},
      {"calibrate-q", "calibrate risk premiums and the bond layer to a quote"},
      {"sensitivity", "scenario table and attachment/exhaustion coupon grid"},
      {"simulate", "simulated bands, exceedance curves and a synthetic series"}};
  for (const auto& [name, desc] : commands) app.add_subcommand(name, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFormat;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const RunConfig c = resolve_config(f, command);
    if (command == "ingest") return cmd_ingest(c, out);
    if (command == "estimate") return cmd_estimate(c, f, out, false);
    if (command == "calibrate-p") return cmd_estimate(c, f, out, true);
    if (command == "price-zcb") return cmd_price_zcb(c, out);
    if (command == "price-mls") return cmd_price_mls(c, f, out);
    if (command == "calibrate-q") return cmd_calibrate_q(c, out);
    if (command == "sensitivity") return cmd_sensitivity(c, out, err);
    if (command == "simulate") return cmd_simulate(c, out);
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const EstimationError& e) {
    err << "estimation failed at " << e.step() << ": " << e.what() << "\n";
    return kExitEstimation;
  } catch (const InsufficientDataError& e) {
    err << "insufficient data: " << e.what() << "\n";
    return command == "ingest" ? kExitFormat : kExitEstimation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return command == "ingest" ? kExitFormat : kExitSimulation;
  }
  return kExitFormat;
}

}  // namespace mortfrac
