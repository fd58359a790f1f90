#include "coinvest/date.hpp"

#include <charconv>
#include <cstdio>

#include "coinvest/errors.hpp"

namespace coinvest {

namespace {

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<Date> try_parse_date(std::string_view text) {
  if (auto cut = text.find_first_of("T "); cut != std::string_view::npos) {
    text = text.substr(0, cut);
  }
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

Date parse_date(std::string_view text) {
  auto date = try_parse_date(text);
  if (!date) throw DataError("invalid date '" + std::string(text) + "'");
  return *date;
}

std::string format_date(Date date) {
  std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date date) {
  return static_cast<int>(std::chrono::year_month_day{date}.year());
}

Date year_end(int year) {
  return Date{std::chrono::year{year} / std::chrono::December / 31};
}

Date today() {
  return std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
}

}  // namespace coinvest
