#ifndef DISPCAST_DATAIO_HPP_
#define DISPCAST_DATAIO_HPP_

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dispcast/panel.hpp"

namespace dispcast {

// One CSV column. Numeric columns keep parsed doubles (NaN marks an empty
// cell); categorical columns keep the raw labels.
struct Column {
  std::string name;
  bool numeric = true;
  std::vector<double> values;
  std::vector<std::string> labels;

  long size() const {
    return static_cast<long>(numeric ? values.size() : labels.size());
  }
};

struct RawDataset {
  std::vector<Column> columns;
  long n_rows = 0;
  long n_rejected = 0;
  std::map<std::string, long> rejection_reasons;

  const Column* find(const std::string& name) const;
  const Column& at(const std::string& name) const;  // throws DataError
  bool has(const std::string& name) const { return find(name) != nullptr; }
};

// Columns that structure the panel rather than describe the dwellings.
bool is_structural_column(const std::string& name);

// Plain CSV (comma separated, no quoting), header row mandatory. A column
// is numeric when every non-empty cell parses as a double.
RawDataset read_csv(std::istream& in);
RawDataset load_csv(const std::string& path);

// Doubles go out with 17 significant digits so a written file replays to
// bit-identical results.
void write_csv(const RawDataset& data, std::ostream& out);
void save_csv(const RawDataset& data, const std::string& path);

struct IngestOptions {
  // Numeric 0/1 columns the caller wants treated as designated binaries
  // during variable selection.
  std::vector<std::string> binary_variables;
};

// Validates the mandatory schema (PRICE or LOG.PRICE, REGION, SECTIONS,
// YEAR, WEIGHT), derives LOG.PRICE from PRICE when absent, and drops rows
// that cannot enter the model. Dropped rows are counted per reason, never
// silently ignored. Throws DataError when a mandatory column is missing
// entirely or no usable rows remain.
RawDataset ingest(const RawDataset& raw, const IngestOptions& opts = {});
RawDataset ingest_csv(std::istream& in, const IngestOptions& opts = {});

// Subpopulation tag 1..9 per row of an ingested dataset. Throws DataError
// on combinations that do not map.
std::vector<int> tag_subpopulations(const RawDataset& data);

// One design-matrix term: a numeric column as-is or logged, or a 0/1
// indicator for one level of a categorical column.
enum class TermKind { Numeric, LogNumeric, Dummy };

struct Term {
  TermKind kind = TermKind::Numeric;
  std::string column;
  std::string level;  // Dummy only

  std::string display() const;
  bool operator==(const Term&) const = default;
};

// Every available covariate: numeric covariates as-is and each categorical
// covariate expanded to indicators with the first lexical level as the
// reference. Year indicators (first year reference) always close the list.
std::vector<Term> default_terms(const RawDataset& data);

// Indicator terms for YEAR with the first level as reference.
std::vector<Term> year_terms(const RawDataset& data);

// Design matrix for the given terms with a leading intercept column.
// Column names land in `names` when non-null.
Eigen::MatrixXd build_design(const RawDataset& data, std::span<const Term> terms,
                             std::vector<std::string>* names = nullptr);

// Full modelling frame: tags, response and design (intercept + terms +
// year indicators if the terms do not already carry them).
TransactionPanel make_panel(const RawDataset& data, std::span<const Term> terms);
TransactionPanel make_panel(const RawDataset& data);  // default_terms

}  // namespace dispcast

#endif  // DISPCAST_DATAIO_HPP_
