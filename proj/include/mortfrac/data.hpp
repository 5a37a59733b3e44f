#pragma once

#include <array>
#include <chrono>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mortfrac {

struct WeeklyMortalityRecord {
  std::string country;
  int year = 0;
  int iso_week = 0;
  std::string sex;
  double deaths_total = 0.0;
  double rate_total = 0.0;
  std::size_t line = 0;
};

/// STMF CSV: keeps Sex == "b" rows (and the given country if non-empty).
std::vector<WeeklyMortalityRecord> parse_stmf(std::istream& in, const std::string& country = "");
std::vector<WeeklyMortalityRecord> parse_stmf_file(const std::string& path, const std::string& country = "");
void write_stmf(std::ostream& out, const std::vector<WeeklyMortalityRecord>& records);

struct RateObservation {
  std::chrono::sys_days date;
  double rate = 0.0;  // percent per annum
  bool filled = false;
  std::size_t line = 0;
};

/// FRED CSV export (date, value). "." or blank values are forward-filled and flagged.
std::vector<RateObservation> parse_fred(std::istream& in);
std::vector<RateObservation> parse_fred_file(const std::string& path);

struct IsoWeek {
  int year = 0;
  int week = 0;
  auto operator<=>(const IsoWeek&) const = default;
};
IsoWeek iso_week_of(std::chrono::sys_days d);
std::chrono::sys_days iso_week_monday(IsoWeek w);
std::string format_date(std::chrono::sys_days d);
std::chrono::sys_days parse_date(const std::string& s);

struct BaselineCurve {
  std::array<double, 52> expected_rate{};
  std::vector<int> reference_years;
};

/// Week-of-year means over the reference years; week 53 is pooled into week 52.
BaselineCurve build_baseline(const std::vector<WeeklyMortalityRecord>& records, const std::vector<int>& reference_years);
/// Smooth seasonal curve at the scale of the US all-age weekly death rate, used when no STMF file is given.
BaselineCurve reference_seasonal_baseline();
double baseline_for_week(const BaselineCurve& b, int iso_week);

std::vector<double> excess_mortality(const std::vector<WeeklyMortalityRecord>& records, const BaselineCurve& baseline);

struct AlignedSeries {
  std::vector<std::chrono::sys_days> weeks;  // Monday of each ISO week
  std::vector<double> excess_mortality;
  std::vector<double> rate;
  std::vector<bool> rate_filled;
  std::map<std::string, std::string> provenance;
};

/// Joins mortality and rates on ISO week within [first_year, last_year]. Weeks without a rate
/// observation carry the previous rate and are flagged.
AlignedSeries align_series(const std::vector<WeeklyMortalityRecord>& records, const std::vector<double>& excess,
                           const std::vector<RateObservation>& rates, int first_year, int last_year);

void write_aligned_csv(std::ostream& out, const AlignedSeries& s);
AlignedSeries read_aligned_csv(std::istream& in);
AlignedSeries read_aligned_file(const std::string& path);
std::string provenance_json(const AlignedSeries& s);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string read_file(const std::string& path);

/// %.10g formatting used by every emitted table.
std::string fmt_num(double v);

}  // namespace mortfrac
