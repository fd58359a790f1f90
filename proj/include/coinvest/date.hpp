#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace coinvest {

using Date = std::chrono::sys_days;

/// Parses "YYYY-MM-DD". A trailing time part ("T..." or " ...") is ignored.
std::optional<Date> try_parse_date(std::string_view text);

/// As try_parse_date, but throws DataError on malformed or impossible dates.
Date parse_date(std::string_view text);

std::string format_date(Date date);

int year_of(Date date);

/// Last day of the given calendar year.
Date year_end(int year);

/// Current UTC calendar date.
Date today();

}  // namespace coinvest
