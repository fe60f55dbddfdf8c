#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "iptwmi/errors.hpp"
#include "iptwmi/linalg.hpp"

namespace iptwmi {

enum class ColumnKind { Continuous, Binary };

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

// A named column; missing cells hold NaN, so the mask is the NaN pattern.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool missing(std::size_t i) const { return is_missing(values[i]); }

  std::size_t missing_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_missing));
  }
  bool fully_observed() const { return missing_count() == 0; }

  std::vector<std::uint8_t> mask() const {
    std::vector<std::uint8_t> m(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = missing(i) ? 1 : 0;
    }
    return m;
  }
};

// Outcome, treatment and covariates of one study. Y and Z are binary.
struct Dataset {
  Column outcome{"Y", ColumnKind::Binary, {}};
  Column treatment{"Z", ColumnKind::Binary, {}};
  std::vector<Column> covariates;

  std::size_t rows() const { return treatment.size(); }

  // Checks lengths and binary coding; throws InputError.
  void validate() const {
    const std::size_t n = rows();
    auto check = [n](const Column& c) {
      if (c.size() != n) {
        throw InputError("column '" + c.name + "' has " + std::to_string(c.size()) + " rows, expected " +
                         std::to_string(n));
      }
      if (c.kind == ColumnKind::Binary) {
        for (std::size_t i = 0; i < n; ++i) {
          double v = c.values[i];
          if (!is_missing(v) && v != 0.0 && v != 1.0) {
            throw InputError("binary column '" + c.name + "' has value " + std::to_string(v) + " at row " +
                             std::to_string(i + 1));
          }
        }
      }
    };
    check(outcome);
    check(treatment);
    for (const auto& c : covariates) {
      check(c);
    }
  }

  bool any_missing() const {
    if (!outcome.fully_observed() || !treatment.fully_observed()) {
      return true;
    }
    return std::any_of(covariates.begin(), covariates.end(), [](const Column& c) { return !c.fully_observed(); });
  }

  // Rows with every covariate observed (and Y, Z when `include_yz`).
  std::vector<std::size_t> complete_rows(bool include_yz = true) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows(); ++i) {
      bool ok = !include_yz || (!outcome.missing(i) && !treatment.missing(i));
      for (const auto& c : covariates) {
        ok = ok && !c.missing(i);
      }
      if (ok) {
        out.push_back(i);
      }
    }
    return out;
  }

  Dataset subset(const std::vector<std::size_t>& idx) const {
    auto take = [&idx](const Column& c) {
      Column out{c.name, c.kind, {}};
      out.values.reserve(idx.size());
      for (auto i : idx) {
        out.values.push_back(c.values[i]);
      }
      return out;
    };
    Dataset d;
    d.outcome = take(outcome);
    d.treatment = take(treatment);
    for (const auto& c : covariates) {
      d.covariates.push_back(take(c));
    }
    return d;
  }

  std::vector<std::string> covariate_names() const {
    std::vector<std::string> out;
    for (const auto& c : covariates) {
      out.push_back(c.name);
    }
    return out;
  }
};

inline Vector to_vector(const Column& c) {
  return Eigen::Map<const Vector>(c.values.data(), static_cast<Eigen::Index>(c.values.size()));
}

// Intercept plus the selected covariate columns (all when `columns` is empty).
// Throws if a requested cell is missing.
inline Matrix design_matrix(const Dataset& d, const std::vector<std::size_t>& columns = {}) {
  std::vector<std::size_t> cols = columns;
  if (cols.empty()) {
    for (std::size_t j = 0; j < d.covariates.size(); ++j) {
      cols.push_back(j);
    }
  }
  const std::size_t n = d.rows();
  Matrix x(n, cols.size() + 1);
  x.col(0).setOnes();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Column& c = d.covariates.at(cols[k]);
    for (std::size_t i = 0; i < n; ++i) {
      if (c.missing(i)) {
        throw EstimationError("design_matrix: covariate '" + c.name + "' missing at row " + std::to_string(i + 1));
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + 1)) = c.values[i];
    }
  }
  return x;
}

struct MissingnessPattern {
  std::vector<std::uint8_t> missing;  // one flag per column, in summary column order
  std::size_t count = 0;
};

struct MissingnessSummary {
  std::vector<std::string> columns;  // outcome, treatment, covariates
  std::vector<double> rates;
  std::vector<MissingnessPattern> patterns;  // ordered by first occurrence
};

inline MissingnessSummary missingness_summary(const Dataset& d) {
  MissingnessSummary s;
  std::vector<const Column*> cols{&d.outcome, &d.treatment};
  for (const auto& c : d.covariates) {
    cols.push_back(&c);
  }
  const std::size_t n = d.rows();
  for (const Column* c : cols) {
    s.columns.push_back(c->name);
    s.rates.push_back(n == 0 ? 0.0 : static_cast<double>(c->missing_count()) / static_cast<double>(n));
  }
  std::map<std::vector<std::uint8_t>, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint8_t> key(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      key[j] = cols[j]->missing(i) ? 1 : 0;
    }
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, s.patterns.size());
      s.patterns.push_back({key, 1});
    } else {
      ++s.patterns[it->second].count;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV ingestion. Empty fields and the literal NA are missing cells.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) {
      continue;
    }
    auto fields = detail::split_csv_line(line);
    if (t.header.empty()) {
      t.header = fields;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InputError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) {
    throw InputError("CSV input is empty");
  }
  return t;
}

inline double parse_cell(const std::string& s, std::size_t row, const std::string& column) {
  if (s.empty() || s == "NA") {
    return kMissing;
  }
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception&) {
    throw InputError("CSV row " + std::to_string(row + 1) + ", column '" + column + "': cannot parse '" + s + "'");
  }
}

// Builds a Dataset from a parsed table given the column roles. A covariate
// whose observed values are all 0/1 is treated as binary.
inline Dataset dataset_from_table(const CsvTable& t, const std::string& outcome, const std::string& treatment,
                                  const std::vector<std::string>& covariates) {
  auto find = [&t](const std::string& name) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) {
      throw InputError("unknown column '" + name + "'");
    }
    return static_cast<std::size_t>(it - t.header.begin());
  };
  auto load = [&](const std::string& name, bool force_binary) {
    std::size_t j = find(name);
    Column c{name, ColumnKind::Continuous, {}};
    c.values.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      c.values.push_back(parse_cell(t.rows[i][j], i, name));
    }
    if (!t.rows.empty() && c.missing_count() == c.size()) {
      throw InputError("column '" + name + "' has no observed values");
    }
    bool binary = std::all_of(c.values.begin(), c.values.end(),
                              [](double v) { return is_missing(v) || v == 0.0 || v == 1.0; });
    if (force_binary && !binary) {
      throw InputError("column '" + name + "' must be coded 0/1");
    }
    c.kind = binary ? ColumnKind::Binary : ColumnKind::Continuous;
    return c;
  };
  if (covariates.empty()) {
    throw InputError("at least one covariate is required");
  }
  Dataset d;
  d.outcome = load(outcome, true);
  d.treatment = load(treatment, true);
  for (const auto& name : covariates) {
    if (name == outcome || name == treatment) {
      throw InputError("column '" + name + "' cannot be both a covariate and the outcome/treatment");
    }
    d.covariates.push_back(load(name, false));
  }
  d.validate();
  return d;
}

inline Dataset read_csv(const std::string& path, const std::string& outcome, const std::string& treatment,
                        const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  return dataset_from_table(parse_csv(in), outcome, treatment, covariates);
}

inline std::string format_number(double v) {
  if (is_missing(v)) {
    return "";
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_csv(std::ostream& out, const Dataset& d) {
  out << d.outcome.name << ',' << d.treatment.name;
  for (const auto& c : d.covariates) {
    out << ',' << c.name;
  }
  out << '\n';
  for (std::size_t i = 0; i < d.rows(); ++i) {
    out << format_number(d.outcome.values[i]) << ',' << format_number(d.treatment.values[i]);
    for (const auto& c : d.covariates) {
      out << ',' << format_number(c.values[i]);
    }
    out << '\n';
  }
}

}  // namespace iptwmi
