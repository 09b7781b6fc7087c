#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "segreg/continuity_test.hpp"
#include "segreg/core_model.hpp"
#include "segreg/estimation.hpp"
#include "segreg/monte_carlo.hpp"

namespace segreg {

/// Comma-delimited file with a header row; cells kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws SchemaError when the column is absent.
  std::size_t column(const std::string& name) const;
  /// Parses one column as doubles. Throws ParseError with the 1-based file
  /// row (header is row 1) and 1-based column.
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

struct EmpiricsSpec {
  std::filesystem::path input;
  std::string year_column = "year";
  std::string growth_column = "growth";
  std::string debt_column = "debt";
  std::size_t bootstrap = 10000;
  std::uint64_t seed = 20190101;
  GridOptions grid{GridStrategy::observed, 0.10, 0, std::nullopt};
  MultiplierDistribution multiplier;
  std::filesystem::path residual_output;  // empty: no export

  void validate() const;
};

struct GrowthDebtSeries {
  std::vector<double> year;
  std::vector<double> growth;  // y_t
  std::vector<double> debt;    // q_t
};

GrowthDebtSeries read_growth_debt(const std::filesystem::path& path, const EmpiricsSpec& spec);

struct LaggedDesign {
  Eigen::VectorXd y;  // y_t
  Eigen::MatrixXd x;  // (1, y_{t-1}, q_t)
};

/// Regressors (1, y_{t-1}, q_t), response y_t, threshold q_t; the first
/// year is consumed by the lag. No sample-size check.
LaggedDesign lagged_design(const GrowthDebtSeries& s);
Dataset lagged_dataset(const GrowthDebtSeries& s);
Dataset load_dataset(const std::filesystem::path& path, const EmpiricsSpec& spec);

/// Plain dataset file: columns y, any middle regressors, q (last). The
/// intercept column is implied.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

struct Ar1Residuals {
  std::vector<double> q;         // q_t, t = 1..n-1
  std::vector<double> residual;  // y_t - c - rho y_{t-1}
  double intercept = 0.0;
  double slope = 0.0;
  bool mean_fallback = false;  // y constant: residuals are deviations from the mean
};

/// AR(1) regression of y_t on (1, y_{t-1}).
Ar1Residuals ar1_residuals(const std::vector<double>& y, const std::vector<double>& q);

/// Writes rows (q_t, residual_t) with header "q,residual".
Ar1Residuals ar1_residual_export(const std::vector<double>& y, const std::vector<double>& q,
                                 const std::filesystem::path& out);

struct EmpiricsReport {
  std::size_t n = 0;
  TestReport test;
  RobustSe se_jump;
  RobustSe se_kink;
  RobustSe hinge;
  bool residuals_written = false;
  bool residual_mean_fallback = false;
};

EmpiricsReport run_empirics(const EmpiricsSpec& spec);

// Human-readable summaries.
std::string format_fit(const FitResult& f, const RobustSe* se);
std::string format_test(const TestReport& r);
std::string format_empirics(const EmpiricsReport& r);
std::string format_table(const SizePowerTable& t);

// Machine-readable forms.
nlohmann::json to_json(const ThetaPoint& t);
nlohmann::json to_json(const FitResult& f);
nlohmann::json to_json(const RobustSe& se);
nlohmann::json to_json(const TestReport& r);
nlohmann::json to_json(const SizePowerTable& t);
nlohmann::json to_json(const RateStudyResult& r);
nlohmann::json to_json(const EmpiricsReport& r);

/// One CSV row per (schedule, n): schedule,n,delta,<size columns>,failures,flagged.
std::string table_csv(const SizePowerTable& t);

/// Writes text verbatim; throws DataError on I/O failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace segreg
