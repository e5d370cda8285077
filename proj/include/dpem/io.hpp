#pragma once

// Text file formats:
//
//   points CSV   header line, then "x" or "x,count" rows in any order;
//                repeated x values are merged by adding their counts.
//   spectra TSV  header line, then rows "mz<TAB>I_1<TAB>...<TAB>I_S" at a
//                fixed m/z step; one sample per intensity column.
//   model file   "key = value" lines describing a fitted mixture.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"
#include "dpem/textio.hpp"

namespace dpem {

namespace detail {

inline InputError parse_error(const std::string& source, std::size_t line, const std::string& what) {
  return InputError(source + ":" + std::to_string(line) + ": " + what);
}

inline bool skippable(std::string_view line) {
  const std::string_view t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace detail

inline WeightedSample read_points_csv(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const std::vector<std::string_view> fields = split(trim(line), ',');
    if (columns == 0) {
      columns = fields.size();
      if (columns < 1 || columns > 2) {
        throw detail::parse_error(source, line_no, "header must name one or two columns (x[,count])");
      }
      continue;
    }
    if (fields.size() != columns) {
      throw detail::parse_error(source, line_no,
                                "expected " + std::to_string(columns) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    const std::optional<double> x = parse_double(fields[0]);
    if (!x || !std::isfinite(*x)) throw detail::parse_error(source, line_no, "x is not a number");
    double count = 1.0;
    if (columns == 2) {
      const std::optional<double> c = parse_double(fields[1]);
      if (!c || !std::isfinite(*c)) throw detail::parse_error(source, line_no, "count is not a number");
      if (*c < 0.0) throw detail::parse_error(source, line_no, "count is negative");
      count = *c;
    }
    rows.emplace_back(*x, count);
  }
  if (columns == 0) throw InputError(source + ": missing header line");
  if (rows.empty()) throw InputError(source + ": no data rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> xs, ys;
  for (const auto& [x, c] : rows) {
    if (!xs.empty() && xs.back() == x) {
      ys.back() += c;
    } else {
      xs.push_back(x);
      ys.push_back(c);
    }
  }
  return WeightedSample(std::move(xs), std::move(ys));
}

inline void write_points_csv(std::ostream& out, const WeightedSample& data) {
  out << "x,count\n";
  for (std::size_t n = 0; n < data.size(); ++n) {
    out << format_double(data.x(n)) << ',' << format_double(data.y(n)) << '\n';
  }
}

struct SpectraSet {
  std::vector<std::string> names;
  std::vector<WeightedSample> samples;
  double bin_width = 0.0;
  std::size_t clipped = 0;  // negative intensities set to zero
};

/// Inclusive m/z window.
struct MzRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Reads a spectra table. The m/z grid is checked to be uniform within 1e-6
/// relative to the step and is then rebuilt exactly as first + n * step.
inline SpectraSet read_spectra_tsv(std::istream& in, const std::string& source = "<input>",
                                   std::optional<MzRange> range = std::nullopt) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<double> mz;
  std::vector<std::vector<double>> columns;
  SpectraSet out;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string_view> fields = split(line, '\t');
    if (header.empty()) {
      if (fields.size() < 2) throw detail::parse_error(source, line_no, "header needs m/z and at least one sample");
      for (std::string_view f : fields) header.emplace_back(trim(f));
      columns.resize(header.size() - 1);
      continue;
    }
    if (fields.size() != header.size()) {
      throw detail::parse_error(source, line_no,
                                "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    const std::optional<double> x = parse_double(fields[0]);
    if (!x || !std::isfinite(*x)) {
      throw detail::parse_error(source, line_no, "column 1: m/z is not a number");
    }
    if (range && (*x < range->lo || *x > range->hi)) continue;
    mz.push_back(*x);
    for (std::size_t s = 1; s < fields.size(); ++s) {
      const std::optional<double> v = parse_double(fields[s]);
      if (!v || !std::isfinite(*v)) {
        throw detail::parse_error(source, line_no,
                                  "column " + std::to_string(s + 1) + ": intensity is not a number");
      }
      double value = *v;
      if (value < 0.0) {
        value = 0.0;
        ++out.clipped;
      }
      columns[s - 1].push_back(value);
    }
  }
  if (header.empty()) throw InputError(source + ": missing header line");
  if (mz.size() < 2) throw InputError(source + ": need at least two m/z rows to infer the bin width");

  const double step = (mz.back() - mz.front()) / static_cast<double>(mz.size() - 1);
  if (!(step > 0.0)) throw InputError(source + ": m/z values are not ascending");
  for (std::size_t n = 1; n < mz.size(); ++n) {
    if (std::abs((mz[n] - mz[n - 1]) - step) > 1e-6 * step) {
      throw InputError(source + ": m/z step is not uniform near m/z " + format_double(mz[n]));
    }
  }
  std::vector<double> grid(mz.size());
  for (std::size_t n = 0; n < mz.size(); ++n) grid[n] = mz.front() + static_cast<double>(n) * step;

  out.bin_width = step;
  for (std::size_t s = 0; s < columns.size(); ++s) {
    out.names.push_back(header[s + 1]);
    try {
      out.samples.emplace_back(grid, std::move(columns[s]), step);
    } catch (const InputError& e) {
      throw InputError(source + ": sample '" + header[s + 1] + "': " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model files

struct ModelRecord {
  std::string method;
  MixtureParams params;
  double loglik = 0.0;
  double bic = 0.0;
  double total_weight = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double sigma_min = 0.0;
  double alpha_min = 0.0;
  std::vector<ClampEvent> clamp_events;
};

inline void write_model(std::ostream& out, const ModelRecord& m) {
  out << "# dpem mixture model\n";
  out << "format = dpem-model/1\n";
  out << "method = " << m.method << '\n';
  out << "components = " << m.params.size() << '\n';
  out << "loglik = " << format_double(m.loglik) << '\n';
  out << "bic = " << format_double(m.bic) << '\n';
  out << "total_weight = " << format_double(m.total_weight) << '\n';
  out << "iterations = " << m.iterations << '\n';
  out << "converged = " << (m.converged ? "true" : "false") << '\n';
  out << "sigma_min = " << format_double(m.sigma_min) << '\n';
  out << "alpha_min = " << format_double(m.alpha_min) << '\n';
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    const std::string idx = std::to_string(k + 1);
    out << "weight." << idx << " = " << format_double(m.params.weight(k)) << '\n';
    out << "mean." << idx << " = " << format_double(m.params.mean(k)) << '\n';
    out << "std." << idx << " = " << format_double(m.params.std_dev(k)) << '\n';
  }
  out << "clamp_events = " << m.clamp_events.size() << '\n';
  for (std::size_t i = 0; i < m.clamp_events.size(); ++i) {
    const ClampEvent& e = m.clamp_events[i];
    out << "clamp." << (i + 1) << " = " << e.iteration << ' ' << (e.component + 1) << ' '
        << to_string(e.kind) << '\n';
  }
}

inline ModelRecord read_model(std::istream& in, const std::string& source = "<model>") {
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw detail::parse_error(source, line_no, "expected 'key = value'");
    kv[std::string(trim(std::string_view(line).substr(0, eq)))] =
        std::string(trim(std::string_view(line).substr(eq + 1)));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InputError(source + ": missing key '" + key + "'");
    return it->second;
  };
  auto number = [&](const std::string& key) {
    const std::string& text = get(key);
    if (text == "inf") return kInf;
    if (text == "-inf") return kNegInf;
    const std::optional<double> v = parse_double(text);
    if (!v) throw InputError(source + ": key '" + key + "' is not a number");
    return *v;
  };
  if (get("format") != "dpem-model/1") throw InputError(source + ": unsupported model format");
  const auto k_count = static_cast<std::size_t>(number("components"));
  std::vector<double> w(k_count), mu(k_count), sd(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::string idx = std::to_string(k + 1);
    w[k] = number("weight." + idx);
    mu[k] = number("mean." + idx);
    sd[k] = number("std." + idx);
  }
  ModelRecord m{.method = get("method"),
                .params = MixtureParams(std::move(w), std::move(mu), std::move(sd))};
  m.loglik = number("loglik");
  m.bic = number("bic");
  m.total_weight = number("total_weight");
  m.iterations = static_cast<std::size_t>(number("iterations"));
  m.converged = get("converged") == "true";
  m.sigma_min = number("sigma_min");
  m.alpha_min = number("alpha_min");
  return m;
}

}  // namespace dpem
