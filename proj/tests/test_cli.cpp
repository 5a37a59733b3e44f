#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mortfrac/cli.hpp"
#include "mortfrac/config.hpp"
#include "mortfrac/data.hpp"
#include "mortfrac/errors.hpp"

using namespace mortfrac;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mortfrac_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "mortfrac");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return rc;
}

std::map<std::string, double> key_values(const fs::path& p) {
  const CsvTable t = read_csv_table(p.string());
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < t.rows.size(); ++i) m[t.rows[i][0]] = t.number(i, "value");
  return m;
}
}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config round trip") {
    RunConfig c = baseline_config();
    c.command = "sensitivity";
    c.model.h1 = 0.61234567890123;
    c.model.sigma2 = 1.0 / 3.0;
    c.premiums.gamma2 = -0.1;
    c.bond.attachment = 0.0147;
    c.bond.exhaustion = 0.0153;
    c.bond_points_given = true;
    c.bond.index_rule = IndexRule::AnnualMax;
    c.quote.premium_spread = 0.055;
    c.sim.seed = 123456789012345ULL;
    c.sim.scheme = Scheme::Euler;
    c.attachment_rule = AttachmentRule::Pooled;
    c.loss_measure = Measure::Pricing;
    c.io.stmf = "data/stmf.csv";
    c.est.hurst_input = HurstInput::Increments;
    c.est.rho_norm = RhoNormalization::AsPrinted;
    c.est.baseline_years = {2016, 2017};
    const std::string text = serialize_config(c);
    const RunConfig d = parse_config(text);
    CHECK(serialize_config(d) == text);
    CHECK(d.model.h1 == c.model.h1);
    CHECK(d.model.sigma2 == c.model.sigma2);
    CHECK(d.sim.seed == c.sim.seed);
    CHECK(d.bond.index_rule == IndexRule::AnnualMax);
    CHECK(d.quote.premium_spread.value() == 0.055);
    CHECK(d.est.baseline_years == std::vector<int>{2016, 2017});
    CHECK(d.attachment_rule == AttachmentRule::Pooled);
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[model\nh1 = 0.7"), FormatError);
    CHECK_THROWS_AS(parse_config("[model]\nh1 = \"x\""), FormatError);
    CHECK_THROWS_AS(parse_config("[bond]\nattachment = 0.01"), FormatError);
    CHECK_THROWS_AS(parse_config("[simulation]\nscheme = \"rk4\""), FormatError);
    const RunConfig c = parse_config("[model]\nrho = 0.1\n");
    CHECK(c.model.rho == 0.1);
    CHECK(c.model.h1 == ModelParams{}.h1);
  }

  TEST_CASE("scenario definitions") {
    const auto sc = standard_scenarios();
    REQUIRE(sc.size() == 6);
    ModelParams p;
    RiskPremiums rp{3.8701, 1.0620, 0, 0};
    apply_scenario(sc[3], p, rp);
    CHECK(p.sigma2 * p.sigma2 == doctest::Approx(2 * 0.00286 * 0.00286));
    apply_scenario(sc[5], p, rp);
    CHECK(rp.gamma2 == doctest::Approx(1.5 * 1.0620));
    apply_scenario(sc[1], p, rp);
    CHECK(p.h1 == 0.5);
    CHECK(p.h2 == 0.5);
    CHECK_THROWS_AS(apply_scenario({9, "bad", {{"nope", 1.0, false}}}, p, rp), FormatError);
  }

  TEST_CASE("exit codes") {
    const fs::path d = scratch("exit");
    CHECK(run({"no-such-command"}) == kExitFormat);
    CHECK(run({"price-zcb", "--bogus"}) == kExitFormat);
    CHECK(run({"ingest", "--stmf", (d / "missing.csv").string(), "--fred", (d / "missing2.csv").string(), "--out", d.string()}) ==
          kExitFormat);
    {
      std::ofstream f(d / "flat.csv");
      f << "date,excess_mortality,rate_percent,rate_filled\n";
      auto day = iso_week_monday({2015, 1});
      for (int i = 0; i < 300; ++i, day += std::chrono::days{7}) f << format_date(day) << ",0,2,0\n";
    }
    CHECK(run({"estimate", "--input", (d / "flat.csv").string(), "--out", d.string()}) == kExitEstimation);
    CHECK(run({"price-mls", "--paths", "200", "--attachment", "0.02", "--exhaustion", "0.01", "--out", d.string()}) ==
          kExitSimulation);
  }

  TEST_CASE("tables re-parse and runs are byte-identical") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    for (const auto& dir : {a, b}) {
      REQUIRE(run({"price-mls", "--paths", "500", "--seed", "5", "--out", dir.string()}) == kExitOk);
      REQUIRE(run({"price-zcb", "--out", dir.string()}) == kExitOk);
    }
    for (const char* f : {"price_report.csv", "risk.csv", "histogram.csv", "maturity.csv", "zcb.csv", "fig1.csv"}) {
      CHECK(read_file((a / f).string()) == read_file((b / f).string()));
      CHECK(read_csv_table((a / f).string()).rows.size() > 0);
    }
    const auto kv = key_values(a / "price_report.csv");
    CHECK(kv.at("fair_coupon") > kv.at("par_yield"));
    CHECK(kv.at("cel") == doctest::Approx(kv.at("el") / kv.at("pfl")));
  }

  TEST_CASE("disabling losses prices the par yield") {
    const fs::path d = scratch("noprf");
    REQUIRE(run({"price-mls", "--paths", "300", "--no-prf", "--out", d.string()}) == kExitOk);
    const auto kv = key_values(d / "price_report.csv");
    CHECK(kv.at("fair_coupon") == doctest::Approx(kv.at("par_yield")).epsilon(1e-12));
    CHECK(kv.at("pfl") == 0.0);
  }

  TEST_CASE("calibrate-q writes a config that price-mls accepts") {
    const fs::path d = scratch("calq");
    REQUIRE(run({"calibrate-q", "--paths", "1000", "--out", d.string()}) == kExitOk);
    const auto kv = key_values(d / "calibration.csv");
    CHECK(kv.at("exhaustion") > kv.at("attachment"));
    const RunConfig c = load_config((d / "calibrated.toml").string());
    CHECK(c.bond_points_given);
    CHECK(c.premiums.gamma1 == doctest::Approx(kv.at("gamma1")).epsilon(1e-9));
    REQUIRE(run({"price-mls", "--config", (d / "calibrated.toml").string(), "--paths", "300", "--out", d.string()}) == kExitOk);
  }

  TEST_CASE("simulate and estimate round trip through files") {
    const fs::path d = scratch("simest");
    REQUIRE(run({"simulate", "--paths", "200", "--out", d.string()}) == kExitOk);
    REQUIRE(run({"calibrate-p", "--input", (d / "synthetic_aligned.csv").string(), "--out", d.string()}) == kExitOk);
    const CsvTable t = read_csv_table((d / "table1.csv").string());
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(0, "H") > 0.5);
    CHECK(t.number(1, "sigma") > 0.0);
    const RunConfig c = load_config((d / "physical.toml").string());
    CHECK(c.model.h1 == doctest::Approx(t.number(0, "H")).epsilon(1e-9));
    CHECK(read_csv_table((d / "fig2.csv").string()).rows.size() == 4 * 31);
  }

  TEST_CASE("decimal rate unit scales the rate parameters") {
    const fs::path d = scratch("units");
    std::ofstream(d / "dec.toml") << "[model]\nm1 = 0.0226377\nsigma1 = 0.0124565\nr0 = 0.043\n";
    REQUIRE(run({"price-zcb", "--config", (d / "dec.toml").string(), "--rate-unit", "decimal", "--out", (d / "x").string()}) == kExitOk);
    REQUIRE(run({"price-zcb", "--out", (d / "y").string()}) == kExitOk);
    const CsvTable x = read_csv_table((d / "x" / "zcb.csv").string()), y = read_csv_table((d / "y" / "zcb.csv").string());
    CHECK(x.number(19, "price_physical") == doctest::Approx(y.number(19, "price_physical")).epsilon(1e-9));
  }
}
