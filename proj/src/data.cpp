#include "mortfrac/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "mortfrac/errors.hpp"

namespace mortfrac {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty())
    throw FormatError("line " + std::to_string(line) + ": cannot parse " + what + " '" + s + "'");
  return v;
}

int parse_int(const std::string& s, std::size_t line, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw FormatError("line " + std::to_string(line) + ": cannot parse " + what + " '" + s + "'");
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

}  // namespace

std::string fmt_num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<WeeklyMortalityRecord> parse_stmf(std::istream& in, const std::string& country) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("CountryCode", 0) == 0 || line.rfind("\"CountryCode\"", 0) == 0) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw FormatError("STMF: header row with CountryCode not found");
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("STMF: missing required column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_country = col("CountryCode"), c_year = col("Year"), c_week = col("Week"), c_sex = col("Sex"),
                    c_d = col("DTotal"), c_r = col("RTotal");
  std::vector<WeeklyMortalityRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw FormatError("STMF line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(f.size()));
    if (f[c_sex] != "b") continue;
    if (!country.empty() && f[c_country] != country) continue;
    WeeklyMortalityRecord r;
    r.country = f[c_country];
    r.year = parse_int(f[c_year], lineno, "Year");
    r.iso_week = parse_int(f[c_week], lineno, "Week");
    r.sex = f[c_sex];
    r.deaths_total = parse_double(f[c_d], lineno, "DTotal");
    r.rate_total = parse_double(f[c_r], lineno, "RTotal");
    r.line = lineno;
    if (r.iso_week < 1 || r.iso_week > 53) throw FormatError("STMF line " + std::to_string(lineno) + ": week outside 1..53");
    if (r.rate_total < 0.0 || r.deaths_total < 0.0)
      throw FormatError("STMF line " + std::to_string(lineno) + ": negative deaths or rate");
    out.push_back(r);
  }
  return out;
}

std::vector<WeeklyMortalityRecord> parse_stmf_file(const std::string& path, const std::string& country) {
  auto in = open_or_throw(path);
  return parse_stmf(in, country);
}

void write_stmf(std::ostream& out, const std::vector<WeeklyMortalityRecord>& records) {
  out << "CountryCode,Year,Week,Sex,DTotal,RTotal\n";
  for (const auto& r : records) {
    out << r.country << ',' << r.year << ',' << r.iso_week << ',' << r.sex << ',' << std::setprecision(17)
        << r.deaths_total << ',' << r.rate_total << '\n';
  }
}

std::chrono::sys_days parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  int used = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%n", &y, &m, &d, &used) != 3 || static_cast<std::size_t>(used) != s.size())
    throw FormatError("bad date '" + s + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw FormatError("invalid date '" + s + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

IsoWeek iso_week_of(std::chrono::sys_days d) {
  using namespace std::chrono;
  const weekday wd{d};
  const int iso_wd = static_cast<int>(wd.iso_encoding());  // Monday = 1
  const sys_days thursday = d + days{4 - iso_wd};
  const year_month_day ymd{thursday};
  const sys_days jan1 = sys_days{ymd.year() / January / 1};
  const int doy = static_cast<int>((thursday - jan1).count());
  return {static_cast<int>(ymd.year()), doy / 7 + 1};
}

std::chrono::sys_days iso_week_monday(IsoWeek w) {
  using namespace std::chrono;
  const sys_days jan4 = sys_days{year{w.year} / January / 4};
  const int iso_wd = static_cast<int>(weekday{jan4}.iso_encoding());
  const sys_days week1_monday = jan4 - days{iso_wd - 1};
  return week1_monday + days{7 * (w.week - 1)};
}

std::vector<RateObservation> parse_fred(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<RateObservation> out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (!f.empty() && !f[0].empty() && !std::isdigit(static_cast<unsigned char>(f[0][0]))) continue;
    }
    if (f.size() != 2) throw FormatError("FRED line " + std::to_string(lineno) + ": expected 2 fields");
    RateObservation o;
    o.date = parse_date(f[0]);
    o.line = lineno;
    if (f[1].empty() || f[1] == ".") {
      if (out.empty()) throw FormatError("FRED line " + std::to_string(lineno) + ": missing value with nothing to carry forward");
      o.rate = out.back().rate;
      o.filled = true;
    } else {
      o.rate = parse_double(f[1], lineno, "rate");
    }
    if (!out.empty() && !(o.date > out.back().date))
      throw FormatError("FRED line " + std::to_string(lineno) + ": dates not strictly increasing");
    out.push_back(o);
  }
  if (out.empty()) throw InsufficientDataError("FRED file contains no observations");
  return out;
}

std::vector<RateObservation> parse_fred_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_fred(in);
}

BaselineCurve build_baseline(const std::vector<WeeklyMortalityRecord>& records, const std::vector<int>& reference_years) {
  if (reference_years.empty()) throw DomainError("build_baseline: no reference years");
  const std::set<int> years(reference_years.begin(), reference_years.end());
  std::array<double, 52> sum{};
  std::array<int, 52> count{};
  for (const auto& r : records) {
    if (!years.count(r.year)) continue;
    const int w = std::min(r.iso_week, 52);
    sum[static_cast<std::size_t>(w - 1)] += r.rate_total;
    count[static_cast<std::size_t>(w - 1)] += 1;
  }
  BaselineCurve b;
  b.reference_years.assign(years.begin(), years.end());
  for (std::size_t w = 0; w < 52; ++w) {
    if (count[w] == 0) throw InsufficientDataError("build_baseline: week " + std::to_string(w + 1) + " absent from all reference years");
    b.expected_rate[w] = sum[w] / count[w];
  }
  return b;
}

BaselineCurve reference_seasonal_baseline() {
  BaselineCurve b;
  const double pi = 3.14159265358979323846;
  for (int w = 1; w <= 52; ++w)
    b.expected_rate[static_cast<std::size_t>(w - 1)] = 0.00865 + 0.00095 * std::cos(2.0 * pi * (w - 2) / 52.0);
  return b;
}

double baseline_for_week(const BaselineCurve& b, int iso_week) {
  if (iso_week < 1 || iso_week > 53) throw DomainError("week outside 1..53");
  return b.expected_rate[static_cast<std::size_t>(std::min(iso_week, 52) - 1)];
}

std::vector<double> excess_mortality(const std::vector<WeeklyMortalityRecord>& records, const BaselineCurve& baseline) {
  std::vector<double> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].rate_total - baseline_for_week(baseline, records[i].iso_week);
  return out;
}

AlignedSeries align_series(const std::vector<WeeklyMortalityRecord>& records, const std::vector<double>& excess,
                           const std::vector<RateObservation>& rates, int first_year, int last_year) {
  if (records.size() != excess.size()) throw DomainError("align_series: records and excess differ in length");
  std::map<IsoWeek, double> mort;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.year < first_year || r.year > last_year) continue;
    const IsoWeek w{r.year, r.iso_week};
    if (mort.count(w)) throw FormatError("duplicate mortality record for " + std::to_string(r.year) + "W" + std::to_string(r.iso_week));
    mort[w] = excess[i];
  }
  if (mort.empty()) throw InsufficientDataError("no mortality records in the requested years");
  std::map<IsoWeek, std::pair<double, bool>> rate_by_week;
  for (const auto& o : rates) rate_by_week[iso_week_of(o.date)] = {o.rate, o.filled};

  AlignedSeries s;
  std::optional<double> last_rate;
  for (const auto& o : rates)
    if (iso_week_of(o.date) < mort.begin()->first) last_rate = o.rate;
  std::chrono::sys_days prev{};
  for (const auto& [w, mu] : mort) {
    const auto monday = iso_week_monday(w);
    if (!s.weeks.empty() && monday - prev != std::chrono::days{7})
      throw InsufficientDataError("mortality series has a gap before " + format_date(monday));
    bool filled = false;
    double r = 0.0;
    if (const auto it = rate_by_week.find(w); it != rate_by_week.end()) {
      r = it->second.first;
      filled = it->second.second;
    } else if (last_rate) {
      r = *last_rate;
      filled = true;
    } else {
      throw InsufficientDataError("no rate observation at or before " + format_date(monday));
    }
    last_rate = r;
    s.weeks.push_back(monday);
    s.excess_mortality.push_back(mu);
    s.rate.push_back(r);
    s.rate_filled.push_back(filled);
    prev = monday;
  }
  s.provenance["week53_rule"] = "week-53 rates use the week-52 baseline";
  s.provenance["missing_rate_rule"] = "forward fill, flagged";
  s.provenance["n_weeks"] = std::to_string(s.weeks.size());
  return s;
}

void write_aligned_csv(std::ostream& out, const AlignedSeries& s) {
  out << "date,excess_mortality,rate_percent,rate_filled\n";
  for (std::size_t i = 0; i < s.weeks.size(); ++i)
    out << format_date(s.weeks[i]) << ',' << fmt_num(s.excess_mortality[i]) << ',' << fmt_num(s.rate[i]) << ','
        << (s.rate_filled[i] ? 1 : 0) << '\n';
}

AlignedSeries read_aligned_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw FormatError("aligned CSV is empty");
  ++lineno;
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "date" || header[1] != "excess_mortality" || header[2] != "rate_percent")
    throw FormatError("aligned CSV header must start with date,excess_mortality,rate_percent");
  AlignedSeries s;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw FormatError("aligned CSV line " + std::to_string(lineno) + ": wrong field count");
    s.weeks.push_back(parse_date(f[0]));
    s.excess_mortality.push_back(parse_double(f[1], lineno, "excess_mortality"));
    s.rate.push_back(parse_double(f[2], lineno, "rate_percent"));
    s.rate_filled.push_back(f.size() > 3 && f[3] == "1");
    if (s.weeks.size() > 1 && s.weeks.back() - s.weeks[s.weeks.size() - 2] != std::chrono::days{7})
      throw FormatError("aligned CSV line " + std::to_string(lineno) + ": dates are not consecutive weeks");
  }
  return s;
}

AlignedSeries read_aligned_file(const std::string& path) {
  auto in = open_or_throw(path);
  AlignedSeries s = read_aligned_csv(in);
  s.provenance["aligned_sha256"] = sha256_file(path);
  return s;
}

std::string provenance_json(const AlignedSeries& s) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : s.provenance) j[k] = v;
  return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string read_file(const std::string& path) {
  auto in = open_or_throw(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

}  // namespace mortfrac
