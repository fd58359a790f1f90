#include "coinvest/returns.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"

namespace coinvest::returns {

ReturnSeries log_returns(const ingest::PriceSeries& prices) {
  const auto& s = prices.samples;
  if (s.size() < 2) {
    throw ArgumentError("asset " + prices.asset_id + ": need at least two price samples");
  }
  for (const auto& sample : s) {
    if (!(sample.close > 0.0)) {
      throw DataError("asset " + prices.asset_id + ": non-positive close on " +
                      format_date(sample.week));
    }
  }
  ReturnSeries r;
  r.asset_id = prices.asset_id;
  for (std::size_t t = 0; t + 1 < s.size(); ++t) {
    if ((s[t + 1].week - s[t].week).count() != 7) continue;
    r.times.push_back(s[t].week);
    r.values.push_back(std::log(s[t + 1].close / s[t].close));
  }
  return r;
}

ReturnSeries loo_rescale(const ReturnSeries& series) {
  const std::size_t n = series.values.size();
  if (n < 3) {
    throw ArgumentError("asset " + series.asset_id +
                        ": leave-one-out rescaling needs at least three returns");
  }
  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(n);

  // Squared deviations summed before and after each t, so the t-excluded sum
  // is formed without cancellation.
  std::vector<double> dev2(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double d = series.values[t] - mean;
    dev2[t] = d * d;
  }
  std::vector<double> before(n + 1, 0.0), after(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) before[t + 1] = before[t] + dev2[t];
  for (std::size_t t = n; t-- > 0;) after[t] = after[t + 1] + dev2[t];

  ReturnSeries out{series.asset_id, series.times, std::vector<double>(n)};
  for (std::size_t t = 0; t < n; ++t) {
    const double variance = (before[t] + after[t + 1]) / static_cast<double>(n - 1);
    if (!(variance > 0.0)) {
      const std::string when =
          t < series.times.size() ? format_date(series.times[t]) : std::to_string(t);
      throw DataError("asset " + series.asset_id + ": zero leave-one-out variance at " + when);
    }
    out.values[t] = (series.values[t] - mean) / std::sqrt(variance);
  }
  return out;
}

std::size_t Panel::observations(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < grid.size(); ++t) n += observed(i, t);
  return n;
}

std::size_t Panel::joint_observations(std::size_t i, std::size_t j) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < grid.size(); ++t) n += observed(i, t) && observed(j, t);
  return n;
}

bool Panel::fully_observed() const {
  return std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
}

namespace {

void flag_pairs(Panel& panel, std::size_t min_overlap) {
  panel.insufficient_pairs.clear();
  for (std::size_t i = 0; i < panel.assets.size(); ++i) {
    for (std::size_t j = i + 1; j < panel.assets.size(); ++j) {
      if (panel.joint_observations(i, j) < min_overlap) panel.insufficient_pairs.emplace_back(i, j);
    }
  }
}

}  // namespace

Panel align_panel(const std::map<std::string, ReturnSeries>& series, const AlignOptions& options) {
  Panel panel;
  std::vector<const ReturnSeries*> kept;
  for (const auto& [asset, s] : series) {
    if (s.values.size() < options.min_overlap) {
      panel.dropped.push_back(asset);
    } else {
      kept.push_back(&s);
    }
  }

  std::set<Date> weeks;
  for (const auto* s : kept) weeks.insert(s->times.begin(), s->times.end());
  if (options.strict_intersection) {
    for (const auto* s : kept) {
      const std::set<Date> own(s->times.begin(), s->times.end());
      std::erase_if(weeks, [&](Date d) { return !own.contains(d); });
    }
  }
  panel.grid.assign(weeks.begin(), weeks.end());
  const std::size_t width = panel.grid.size();
  panel.values = Matrix(kept.size(), width);
  panel.mask.assign(kept.size() * width, 0);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    panel.assets.push_back(kept[i]->asset_id);
    for (std::size_t k = 0; k < kept[i]->times.size(); ++k) {
      auto it = std::lower_bound(panel.grid.begin(), panel.grid.end(), kept[i]->times[k]);
      if (it == panel.grid.end() || *it != kept[i]->times[k]) continue;
      const auto t = static_cast<std::size_t>(it - panel.grid.begin());
      panel.values(i, t) = kept[i]->values[k];
      panel.mask[i * width + t] = 1;
    }
  }
  flag_pairs(panel, options.min_overlap);
  return panel;
}

Panel prune_insufficient(Panel panel, std::size_t min_overlap) {
  flag_pairs(panel, min_overlap);
  while (!panel.insufficient_pairs.empty()) {
    std::vector<std::size_t> count(panel.assets.size(), 0);
    for (const auto& [i, j] : panel.insufficient_pairs) {
      ++count[i];
      ++count[j];
    }
    std::size_t worst = 0;
    for (std::size_t i = 1; i < count.size(); ++i) {
      if (count[i] >= count[worst]) worst = i;
    }
    const std::size_t width = panel.grid.size();
    Panel next;
    next.grid = panel.grid;
    next.dropped = panel.dropped;
    next.dropped.push_back(panel.assets[worst]);
    next.values = Matrix(panel.assets.size() - 1, width);
    for (std::size_t i = 0, r = 0; i < panel.assets.size(); ++i) {
      if (i == worst) continue;
      next.assets.push_back(panel.assets[i]);
      for (std::size_t t = 0; t < width; ++t) {
        next.values(r, t) = panel.values(i, t);
        next.mask.push_back(panel.mask[i * width + t]);
      }
      ++r;
    }
    panel = std::move(next);
    flag_pairs(panel, min_overlap);
  }
  return panel;
}

CorrelationMatrix correlation_matrix(const Panel& panel, std::size_t min_overlap,
                                     CorrelationKind kind) {
  const std::size_t n = panel.assets.size();
  const std::size_t width = panel.grid.size();
  CorrelationMatrix out{panel.assets, Matrix(n, n), kind};
  std::string short_pairs;
  std::size_t short_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t t = 0; t < width; ++t) {
        if (panel.observed(i, t) && panel.observed(j, t)) {
          sum += panel.values(i, t) * panel.values(j, t);
          ++count;
        }
      }
      if (count < min_overlap || count == 0) {
        if (++short_count <= 10) {
          short_pairs += " (" + panel.assets[i] + ", " + panel.assets[j] + ": " +
                         std::to_string(count) + ")";
        }
        continue;
      }
      out.c(i, j) = out.c(j, i) = sum / static_cast<double>(count);
    }
  }
  if (short_count > 0) {
    throw DataError(std::to_string(short_count) + " asset pairs have fewer than " +
                    std::to_string(min_overlap) + " joint observations:" + short_pairs);
  }
  return out;
}

EigenDecomposition eigendecompose(const CorrelationMatrix& c) { return linalg::symmetric_eigen(c.c); }

ModePanel compute_modes(const Panel& panel, const EigenDecomposition& d) {
  const std::size_t n = panel.assets.size();
  if (d.vectors.rows() != n || d.vectors.cols() != n) {
    throw ArgumentError("decomposition dimension " + std::to_string(d.vectors.rows()) +
                        " does not match panel of " + std::to_string(n) + " assets");
  }
  const std::size_t width = panel.grid.size();
  ModePanel m{panel.grid, Matrix(n, width)};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d.vectors(a, j);
      for (std::size_t t = 0; t < width; ++t) {
        if (panel.observed(j, t)) m.modes(a, t) += v * panel.values(j, t);
      }
    }
  }
  return m;
}

Matrix reconstruct(const ModePanel& modes, const EigenDecomposition& d) {
  const std::size_t n = d.vectors.rows();
  const std::size_t width = modes.grid.size();
  Matrix r(n, width);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = d.vectors(a, i);
      for (std::size_t t = 0; t < width; ++t) r(i, t) += v * modes.modes(a, t);
    }
  }
  return r;
}

Panel remove_market_mode(const Panel& panel, const EigenDecomposition& d) {
  const ModePanel modes = compute_modes(panel, d);
  Panel adjusted = panel;
  if (panel.assets.empty()) return adjusted;
  for (std::size_t i = 0; i < panel.assets.size(); ++i) {
    const double loading = d.vectors(0, i);
    for (std::size_t t = 0; t < panel.grid.size(); ++t) {
      if (panel.observed(i, t)) adjusted.values(i, t) -= loading * modes.modes(0, t);
    }
  }
  return adjusted;
}

CorrelationMatrix adjusted_correlation(const Panel& adjusted, std::size_t min_overlap) {
  return correlation_matrix(adjusted, min_overlap, CorrelationKind::adjusted);
}

double market_mode_residual(const CorrelationMatrix& adjusted, const EigenDecomposition& d) {
  const std::size_t n = adjusted.assets.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) total += d.vectors(0, i) * adjusted.c(i, j) * d.vectors(0, j);
  }
  return total;
}

std::string panel_csv(const Panel& panel) {
  std::ostringstream s;
  std::vector<std::string> row{"date"};
  row.insert(row.end(), panel.assets.begin(), panel.assets.end());
  write_csv_row(s, row);
  for (std::size_t t = 0; t < panel.grid.size(); ++t) {
    row.assign(1, format_date(panel.grid[t]));
    for (std::size_t i = 0; i < panel.assets.size(); ++i) {
      row.push_back(panel.observed(i, t) ? format_double(panel.values(i, t)) : "");
    }
    write_csv_row(s, row);
  }
  return s.str();
}

std::string matrix_csv(const CorrelationMatrix& c) {
  std::ostringstream s;
  std::vector<std::string> row{"asset"};
  row.insert(row.end(), c.assets.begin(), c.assets.end());
  write_csv_row(s, row);
  for (std::size_t i = 0; i < c.assets.size(); ++i) {
    row.assign(1, c.assets[i]);
    for (std::size_t j = 0; j < c.assets.size(); ++j) row.push_back(format_double(c.c(i, j)));
    write_csv_row(s, row);
  }
  return s.str();
}

CorrelationMatrix read_matrix_csv(const std::filesystem::path& path, CorrelationKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvReader reader(in);
  const auto& header = reader.header();
  if (header.empty() || header.front() != "asset") {
    throw SchemaError(path.string() + ": expected 'asset' header column");
  }
  CorrelationMatrix out;
  out.kind = kind;
  out.assets.assign(header.begin() + 1, header.end());
  const std::size_t n = out.assets.size();
  out.c = Matrix(n, n);
  std::vector<std::string> fields;
  std::size_t r = 0;
  while (reader.next(fields)) {
    if (r >= n || fields.size() != n + 1 || fields[0] != out.assets[r]) {
      throw SchemaError(path.string() + ": malformed matrix row at line " +
                        std::to_string(reader.line()));
    }
    for (std::size_t j = 0; j < n; ++j) {
      auto v = parse_double(fields[j + 1]);
      if (!v) throw SchemaError(path.string() + ": non-numeric entry at line " +
                                std::to_string(reader.line()));
      out.c(r, j) = *v;
    }
    ++r;
  }
  if (r != n) throw SchemaError(path.string() + ": matrix is not square");
  return out;
}

}  // namespace coinvest::returns
