#include "dispcast/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "dispcast/errors.hpp"
#include "dispcast/format.hpp"

namespace dispcast {

namespace {

constexpr const char* kMandatory[] = {"REGION", "SECTIONS", "YEAR", "WEIGHT"};

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') return false;
  *out = v;
  return true;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

// -1 when the cell does not name a region.
int parse_region(const Column& col, long row) {
  if (col.numeric) {
    const double v = col.values[row];
    if (std::isnan(v)) return -1;
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 || r < 1 || r > kNumRegions) return -1;
    return static_cast<int>(r);
  }
  const std::string name = lower(col.labels[row]);
  for (int code = 1; code <= kNumRegions; ++code)
    if (name == region_name(code)) return code;
  return -1;
}

// -1 when the cell does not name a sections class.
int parse_sections(const Column& col, long row) {
  if (col.numeric) {
    const double v = col.values[row];
    if (std::isnan(v)) return -1;
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 || r < 1) return -1;
    return r >= 3 ? kSectionsThreePlus
                  : (r == 2 ? kSectionsDouble : kSectionsSingle);
  }
  const std::string name = lower(col.labels[row]);
  if (name == "single") return kSectionsSingle;
  if (name == "double") return kSectionsDouble;
  if (name == "three_or_more" || name == "three-or-more")
    return kSectionsThreePlus;
  return -1;
}

bool cell_missing(const Column& col, long row) {
  return col.numeric ? std::isnan(col.values[row]) : col.labels[row].empty();
}

Column filter_column(const Column& col, const std::vector<char>& keep,
                     long kept) {
  Column out;
  out.name = col.name;
  out.numeric = col.numeric;
  if (col.numeric)
    out.values.reserve(kept);
  else
    out.labels.reserve(kept);
  for (long i = 0; i < col.size(); ++i) {
    if (!keep[i]) continue;
    if (col.numeric)
      out.values.push_back(col.values[i]);
    else
      out.labels.push_back(col.labels[i]);
  }
  return out;
}

std::vector<std::string> sorted_levels(const Column& col) {
  std::set<std::string> levels;
  if (col.numeric) {
    for (double v : col.values)
      levels.insert(str17(std::round(v)));
  } else {
    for (const std::string& s : col.labels) levels.insert(s);
  }
  return {levels.begin(), levels.end()};
}

bool dummy_matches(const Column& col, long row, const std::string& level) {
  if (col.numeric) return str17(std::round(col.values[row])) == level;
  return col.labels[row] == level;
}

}  // namespace

const Column* RawDataset::find(const std::string& name) const {
  for (const Column& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

const Column& RawDataset::at(const std::string& name) const {
  const Column* c = find(name);
  if (!c) throw DataError("missing column: " + name);
  return *c;
}

bool is_structural_column(const std::string& name) {
  return name == "PRICE" || name == "LOG.PRICE" || name == "REGION" ||
         name == "SECTIONS" || name == "YEAR" || name == "WEIGHT";
}

RawDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  const std::vector<std::string> header = split_line(line);
  if (header.empty() || header[0].empty())
    throw DataError("CSV header row is malformed");

  std::vector<std::vector<std::string>> cells(header.size());
  RawDataset out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row = split_line(line);
    if (row.size() != header.size()) {
      ++out.n_rejected;
      ++out.rejection_reasons["ragged_row"];
      continue;
    }
    for (std::size_t j = 0; j < row.size(); ++j)
      cells[j].push_back(std::move(row[j]));
    ++out.n_rows;
  }

  for (std::size_t j = 0; j < header.size(); ++j) {
    Column col;
    col.name = header[j];
    col.numeric = true;
    double v = 0.0;
    for (const std::string& s : cells[j]) {
      if (s.empty()) continue;
      if (!parse_double(s, &v)) {
        col.numeric = false;
        break;
      }
    }
    if (col.numeric) {
      col.values.reserve(cells[j].size());
      for (const std::string& s : cells[j])
        col.values.push_back(parse_double(s, &v)
                                 ? v
                                 : std::numeric_limits<double>::quiet_NaN());
    } else {
      col.labels = std::move(cells[j]);
    }
    out.columns.push_back(std::move(col));
  }
  return out;
}

RawDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_csv(in);
}

void write_csv(const RawDataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.columns.size(); ++j)
    out << (j ? "," : "") << data.columns[j].name;
  out << "\n";
  for (long i = 0; i < data.n_rows; ++i) {
    for (std::size_t j = 0; j < data.columns.size(); ++j) {
      if (j) out << ",";
      const Column& col = data.columns[j];
      if (col.numeric) {
        if (!std::isnan(col.values[i])) out << str17(col.values[i]);
      } else {
        out << col.labels[i];
      }
    }
    out << "\n";
  }
}

void save_csv(const RawDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_csv(data, out);
}

RawDataset ingest(const RawDataset& raw, const IngestOptions& opts) {
  for (const char* name : kMandatory)
    if (!raw.has(name)) throw DataError(std::string("missing column: ") + name);
  const bool has_price = raw.has("PRICE");
  const bool has_log_price = raw.has("LOG.PRICE");
  if (!has_price && !has_log_price)
    throw DataError("missing column: PRICE or LOG.PRICE");
  for (const std::string& name : opts.binary_variables) {
    const Column& col = raw.at(name);
    if (!col.numeric)
      throw DataError("designated binary variable is not numeric: " + name);
    for (double v : col.values)
      if (!std::isnan(v) && v != 0.0 && v != 1.0)
        throw DataError("designated binary variable is not 0/1: " + name);
  }

  const Column& region = raw.at("REGION");
  const Column& sections = raw.at("SECTIONS");
  const Column& year = raw.at("YEAR");
  const Column& weight = raw.at("WEIGHT");
  const Column* price = has_price ? &raw.at("PRICE") : nullptr;
  const Column* log_price = has_log_price ? &raw.at("LOG.PRICE") : nullptr;
  if (!weight.numeric) throw DataError("WEIGHT must be numeric");
  if (!year.numeric) throw DataError("YEAR must be numeric");
  if (price && !price->numeric) throw DataError("PRICE must be numeric");
  if (log_price && !log_price->numeric)
    throw DataError("LOG.PRICE must be numeric");

  RawDataset out;
  out.n_rejected = raw.n_rejected;
  out.rejection_reasons = raw.rejection_reasons;

  std::vector<char> keep(raw.n_rows, 0);
  std::vector<int> region_code(raw.n_rows, 0);
  std::vector<int> sections_cls(raw.n_rows, 0);
  long kept = 0;
  auto reject = [&out](const char* reason) {
    ++out.n_rejected;
    ++out.rejection_reasons[reason];
  };
  for (long i = 0; i < raw.n_rows; ++i) {
    bool mandatory_missing =
        cell_missing(region, i) || cell_missing(sections, i) ||
        cell_missing(year, i) || cell_missing(weight, i) ||
        (has_log_price ? cell_missing(*log_price, i) : cell_missing(*price, i));
    if (mandatory_missing) {
      reject("missing_mandatory");
      continue;
    }
    if (price && !has_log_price && !(price->values[i] > 0.0)) {
      reject("nonpositive_price");
      continue;
    }
    if (!(weight.values[i] > 0.0)) {
      reject("nonpositive_weight");
      continue;
    }
    const double y = year.values[i];
    if (std::abs(y - std::round(y)) > 1e-9) {
      reject("bad_year");
      continue;
    }
    region_code[i] = parse_region(region, i);
    if (region_code[i] < 0) {
      reject("bad_region");
      continue;
    }
    sections_cls[i] = parse_sections(sections, i);
    if (sections_cls[i] < 0) {
      reject("bad_sections");
      continue;
    }
    if (region_code[i] == kRegionNational &&
        sections_cls[i] != kSectionsThreePlus) {
      reject("unmappable_subpopulation");
      continue;
    }
    bool covariate_missing = false;
    for (const Column& col : raw.columns) {
      if (is_structural_column(col.name)) continue;
      if (cell_missing(col, i)) {
        covariate_missing = true;
        break;
      }
    }
    if (covariate_missing) {
      reject("missing_covariate");
      continue;
    }
    keep[i] = 1;
    ++kept;
  }
  if (kept == 0) throw DataError("no usable rows after ingestion");

  for (const Column& col : raw.columns) {
    if (col.name == "REGION" || col.name == "SECTIONS" ||
        col.name == "LOG.PRICE")
      continue;  // rebuilt in canonical form below
    out.columns.push_back(filter_column(col, keep, kept));
  }
  Column reg_col{"REGION", true, {}, {}};
  Column sec_col{"SECTIONS", false, {}, {}};
  for (long i = 0; i < raw.n_rows; ++i) {
    if (!keep[i]) continue;
    reg_col.values.push_back(region_code[i]);
    sec_col.labels.push_back(sections_name(sections_cls[i]));
  }
  out.columns.push_back(std::move(reg_col));
  out.columns.push_back(std::move(sec_col));

  Column lp_col{"LOG.PRICE", true, {}, {}};
  if (has_log_price) {
    lp_col = filter_column(*log_price, keep, kept);
    lp_col.name = "LOG.PRICE";
  } else {
    lp_col.values.reserve(kept);
    for (long i = 0; i < raw.n_rows; ++i)
      if (keep[i]) lp_col.values.push_back(std::log(price->values[i]));
  }
  out.columns.push_back(std::move(lp_col));
  out.n_rows = kept;
  return out;
}

RawDataset ingest_csv(std::istream& in, const IngestOptions& opts) {
  return ingest(read_csv(in), opts);
}

std::vector<int> tag_subpopulations(const RawDataset& data) {
  const Column& region = data.at("REGION");
  const Column& sections = data.at("SECTIONS");
  std::vector<int> out(data.n_rows);
  for (long i = 0; i < data.n_rows; ++i) {
    const int code = parse_region(region, i);
    const int cls = parse_sections(sections, i);
    if (code < 0) throw DataError("unparsable REGION value");
    if (cls < 0) throw DataError("unparsable SECTIONS value");
    out[i] = subpopulation_of(code, cls);
  }
  return out;
}

std::string Term::display() const {
  switch (kind) {
    case TermKind::Numeric:
      return column;
    case TermKind::LogNumeric:
      return "LOG(" + column + ")";
    case TermKind::Dummy:
      return column + "=" + level;
  }
  return column;
}

std::vector<Term> year_terms(const RawDataset& data) {
  const std::vector<std::string> levels = sorted_levels(data.at("YEAR"));
  std::vector<Term> out;
  for (std::size_t k = 1; k < levels.size(); ++k)
    out.push_back({TermKind::Dummy, "YEAR", levels[k]});
  return out;
}

std::vector<Term> default_terms(const RawDataset& data) {
  std::vector<Term> out;
  for (const Column& col : data.columns) {
    if (is_structural_column(col.name)) continue;
    if (col.numeric) {
      out.push_back({TermKind::Numeric, col.name, ""});
    } else {
      const std::vector<std::string> levels = sorted_levels(col);
      for (std::size_t k = 1; k < levels.size(); ++k)
        out.push_back({TermKind::Dummy, col.name, levels[k]});
    }
  }
  const std::vector<Term> years = year_terms(data);
  out.insert(out.end(), years.begin(), years.end());
  return out;
}

Eigen::MatrixXd build_design(const RawDataset& data, std::span<const Term> terms,
                             std::vector<std::string>* names) {
  const long n = data.n_rows;
  Eigen::MatrixXd X(n, static_cast<long>(terms.size()) + 1);
  X.col(0).setOnes();
  if (names) {
    names->clear();
    names->push_back("(Intercept)");
  }
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const Term& term = terms[t];
    const Column& col = data.at(term.column);
    const long j = static_cast<long>(t) + 1;
    switch (term.kind) {
      case TermKind::Numeric:
        if (!col.numeric)
          throw DataError("term needs a numeric column: " + term.column);
        for (long i = 0; i < n; ++i) X(i, j) = col.values[i];
        break;
      case TermKind::LogNumeric:
        if (!col.numeric)
          throw DataError("term needs a numeric column: " + term.column);
        for (long i = 0; i < n; ++i) {
          if (!(col.values[i] > 0.0))
            throw DataError("log transform needs positive values: " +
                            term.column);
          X(i, j) = std::log(col.values[i]);
        }
        break;
      case TermKind::Dummy:
        for (long i = 0; i < n; ++i)
          X(i, j) = dummy_matches(col, i, term.level) ? 1.0 : 0.0;
        break;
    }
    if (names) names->push_back(term.display());
  }
  return X;
}

TransactionPanel make_panel(const RawDataset& data, std::span<const Term> terms) {
  TransactionPanel panel;
  const long n = data.n_rows;
  if (n == 0) throw DataError("panel has no records");

  const Column& log_price = data.at("LOG.PRICE");
  const Column& year = data.at("YEAR");
  const Column& weight = data.at("WEIGHT");
  const Column& region = data.at("REGION");
  const Column& sections = data.at("SECTIONS");
  const Column* bedrooms = data.find("BEDROOMS");

  panel.log_price.resize(n);
  for (long i = 0; i < n; ++i) panel.log_price[i] = log_price.values[i];
  panel.design = build_design(data, terms, &panel.design_columns);

  std::set<int> year_set;
  for (long i = 0; i < n; ++i)
    year_set.insert(static_cast<int>(std::llround(year.values[i])));
  std::vector<int> years(year_set.begin(), year_set.end());
  panel.n_years = static_cast<int>(years.size());

  panel.region.resize(n);
  panel.year_index.resize(n);
  panel.year_label.resize(n);
  panel.weight.resize(n);
  panel.subpopulation.resize(n);
  panel.sections_class.resize(n);
  panel.bedrooms_class.assign(n, kBedroomsTwoOrFewer);
  for (long i = 0; i < n; ++i) {
    panel.region[i] = parse_region(region, i);
    panel.sections_class[i] = parse_sections(sections, i);
    if (panel.region[i] < 0 || panel.sections_class[i] < 0)
      throw DataError("unparsable REGION or SECTIONS value");
    panel.subpopulation[i] =
        subpopulation_of(panel.region[i], panel.sections_class[i]);
    const int y = static_cast<int>(std::llround(year.values[i]));
    panel.year_label[i] = y;
    panel.year_index[i] =
        static_cast<int>(std::lower_bound(years.begin(), years.end(), y) -
                         years.begin()) +
        1;
    panel.weight[i] = weight.values[i];
    if (bedrooms) {
      if (bedrooms->numeric) {
        panel.bedrooms_class[i] = bedrooms->values[i] >= 3.0
                                      ? kBedroomsThreePlus
                                      : kBedroomsTwoOrFewer;
      } else {
        panel.bedrooms_class[i] = bedrooms->labels[i] == "three_or_more"
                                      ? kBedroomsThreePlus
                                      : kBedroomsTwoOrFewer;
      }
    }
  }
  panel.validate();
  return panel;
}

TransactionPanel make_panel(const RawDataset& data) {
  const std::vector<Term> terms = default_terms(data);
  return make_panel(data, terms);
}

}  // namespace dispcast
