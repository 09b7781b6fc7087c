#include "segreg/cli_io.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "segreg/errors.hpp"

namespace segreg {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string num(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw SchemaError("missing column \"" + name + "\"");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const std::size_t j = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double v = 0.0;
    if (j >= rows[r].size() || !parse_double(rows[r][j], v)) {
      throw ParseError("non-numeric value in column \"" + name + "\"", r + 2, j + 1);
    }
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no, std::min(cells.size(), t.header.size()) + 1);
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw SchemaError("file has no header row: " + path.string());
  return t;
}

void EmpiricsSpec::validate() const {
  if (bootstrap == 0) throw InvalidConfig("number of bootstrap draws B must be positive");
  if (input.empty()) throw InvalidConfig("no input file given");
}

GrowthDebtSeries read_growth_debt(const std::filesystem::path& path, const EmpiricsSpec& spec) {
  const CsvTable t = read_csv(path);
  GrowthDebtSeries s;
  s.year = t.numeric_column(spec.year_column);
  s.growth = t.numeric_column(spec.growth_column);
  s.debt = t.numeric_column(spec.debt_column);
  return s;
}

LaggedDesign lagged_design(const GrowthDebtSeries& s) {
  const std::size_t rows = s.growth.size();
  if (rows < 2 || s.debt.size() != rows) throw DataError("series too short or misaligned");
  const auto n = static_cast<Eigen::Index>(rows - 1);
  LaggedDesign out{Eigen::VectorXd(n), Eigen::MatrixXd(n, 3)};
  for (Eigen::Index t = 0; t < n; ++t) {
    out.y[t] = s.growth[t + 1];
    out.x(t, 0) = 1.0;
    out.x(t, 1) = s.growth[t];
    out.x(t, 2) = s.debt[t + 1];
  }
  return out;
}

Dataset lagged_dataset(const GrowthDebtSeries& s) {
  LaggedDesign l = lagged_design(s);
  return Dataset(std::move(l.y), std::move(l.x));
}

Dataset load_dataset(const std::filesystem::path& path, const EmpiricsSpec& spec) {
  return lagged_dataset(read_growth_debt(path, spec));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2) throw SchemaError("dataset needs at least columns y and q");
  if (t.header.front() != "y") throw SchemaError("first column must be \"y\"");
  if (t.header.back() != "q") throw SchemaError("last column must be \"q\"");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto mid = static_cast<Eigen::Index>(t.header.size()) - 2;
  Eigen::VectorXd y(n), q(n);
  Eigen::MatrixXd middle(n, mid);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < mid + 2; ++j) {
      double v = 0.0;
      if (!parse_double(t.rows[i][j], v)) {
        throw ParseError("non-numeric value", static_cast<std::size_t>(i) + 2,
                         static_cast<std::size_t>(j) + 1);
      }
      if (j == 0) {
        y[i] = v;
      } else if (j == mid + 1) {
        q[i] = v;
      } else {
        middle(i, j - 1) = v;
      }
    }
  }
  return Dataset::from_parts(std::move(y), middle, q);
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "y";
  for (std::size_t j = 1; j + 1 < ds.d(); ++j) os << ",x" << j;
  os << ",q\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    os << num(ds.y()[i]);
    for (std::size_t j = 1; j < ds.d(); ++j) os << ',' << num(ds.x()(i, j));
    os << '\n';
  }
  write_text(path, os.str());
}

Ar1Residuals ar1_residuals(const std::vector<double>& y, const std::vector<double>& q) {
  if (y.size() != q.size()) throw InvalidConfig("y and q lengths differ");
  if (y.size() < 3) throw DataError("AR(1) fit needs at least 3 observations");
  const auto m = static_cast<Eigen::Index>(y.size() - 1);
  Eigen::MatrixXd z(m, 2);
  Eigen::VectorXd resp(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    z(t, 0) = 1.0;
    z(t, 1) = y[t];
    resp[t] = y[t + 1];
  }
  Ar1Residuals out;
  out.q.assign(q.begin() + 1, q.end());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(std::numeric_limits<double>::epsilon() * static_cast<double>(m));
  Eigen::VectorXd resid;
  if (qr.rank() < 2) {
    out.mean_fallback = true;
    out.intercept = resp.mean();
    resid = resp.array() - out.intercept;
  } else {
    const Eigen::VectorXd coef = qr.solve(resp);
    out.intercept = coef[0];
    out.slope = coef[1];
    resid = resp - z * coef;
  }
  out.residual.assign(resid.begin(), resid.end());
  return out;
}

Ar1Residuals ar1_residual_export(const std::vector<double>& y, const std::vector<double>& q,
                                 const std::filesystem::path& path) {
  Ar1Residuals r = ar1_residuals(y, q);
  std::ostringstream os;
  os << "q,residual\n";
  for (std::size_t i = 0; i < r.q.size(); ++i) os << num(r.q[i]) << ',' << num(r.residual[i]) << '\n';
  write_text(path, os.str());
  return r;
}

EmpiricsReport run_empirics(const EmpiricsSpec& spec) {
  spec.validate();
  const GrowthDebtSeries series = read_growth_debt(spec.input, spec);
  const Dataset ds = lagged_dataset(series);
  if (ds.n() < 30) throw DataError("empirical analysis needs at least 30 observations after lagging");
  const ThresholdGrid grid = build_grid(ds, spec.grid);

  EmpiricsReport rep;
  rep.n = ds.n();
  rep.test = run_test(ds, grid, spec.bootstrap, spec.multiplier, spec.seed);
  rep.se_jump = robust_standard_errors(ds, rep.test.fit_u);
  rep.se_kink = robust_standard_errors(ds, rep.test.fit_c);
  rep.hinge = hinge_form(rep.se_kink, ds.d());
  if (!spec.residual_output.empty()) {
    const auto r = ar1_residual_export(series.growth, series.debt, spec.residual_output);
    rep.residuals_written = true;
    rep.residual_mean_fallback = r.mean_fallback;
  }
  return rep;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string format_fit(const FitResult& f, const RobustSe* se) {
  std::ostringstream os;
  os << (f.constrained ? "Constrained (kink) fit" : "Unconstrained (jump) fit") << '\n';
  os << "  tau          " << num(f.theta.tau, 6) << '\n';
  os << "  SSR/n        " << num(f.ssr_min, 8) << '\n';
  os << "  regimes      " << f.regime.n_lower << " lower / " << f.regime.n_upper << " upper\n";
  os << "  grid points  " << f.grid.points.size() << " (" << to_string(f.grid.strategy)
     << ", trim " << f.grid.trim_fraction << ")";
  if (!f.failed_points.empty()) os << ", " << f.failed_points.size() << " singular cells skipped";
  os << '\n';
  if (se != nullptr) {
    os << "  coefficient        estimate      robust se\n";
    for (Eigen::Index j = 0; j < se->coef.size(); ++j) {
      os << "  " << std::left << std::setw(16) << se->names[j] << std::right << std::setw(12)
         << num(se->coef[j], 6) << std::setw(15) << num(se->se[j], 6) << '\n';
    }
  } else {
    const auto d = f.theta.beta.size();
    for (Eigen::Index j = 0; j < d; ++j)
      os << "  beta" << j << "        " << num(f.theta.beta[j], 6) << '\n';
    for (Eigen::Index j = 0; j < d; ++j)
      os << "  delta" << j << "       " << num(f.theta.delta[j], 6) << '\n';
  }
  return os.str();
}

std::string format_test(const TestReport& r) {
  std::ostringstream os;
  os << "Continuity test (wild bootstrap, " << to_string(r.multiplier.kind) << " multipliers)\n";
  os << "  T_n          " << num(r.t_n, 8);
  if (r.degenerate) os << "  (unconstrained fit is exact; reported as 0)";
  os << '\n';
  os << "  B            " << r.boot_stats.size() << '\n';
  os << "  p*           " << num(r.p_star, 6) << '\n';
  os << "  seed         " << r.seed << '\n';
  if (r.degenerate_draws > 0) {
    os << "  warning: " << r.degenerate_draws << " bootstrap draws fit exactly (recorded as 0)\n";
  }
  os << "  tau (jump)   " << num(r.fit_u.theta.tau, 6) << "   regimes " << r.fit_u.regime.n_lower
     << "/" << r.fit_u.regime.n_upper << '\n';
  os << "  tau (kink)   " << num(r.fit_c.theta.tau, 6) << "   regimes " << r.fit_c.regime.n_lower
     << "/" << r.fit_c.regime.n_upper << '\n';
  return os.str();
}

std::string format_empirics(const EmpiricsReport& r) {
  std::ostringstream os;
  os << "Usable observations: " << r.n << "\n\n";
  os << format_fit(r.test.fit_u, &r.se_jump) << '\n';
  os << format_fit(r.test.fit_c, &r.se_kink) << '\n';
  os << "Kink fit in hinge form\n";
  for (Eigen::Index j = 0; j < r.hinge.coef.size(); ++j) {
    os << "  " << std::left << std::setw(18) << r.hinge.names[j] << std::right << std::setw(12)
       << num(r.hinge.coef[j], 6) << std::setw(15) << num(r.hinge.se[j], 6) << '\n';
  }
  os << '\n' << format_test(r.test);
  if (r.residual_mean_fallback) os << "warning: growth series is constant; residuals are deviations from the mean\n";
  return os.str();
}

std::string format_table(const SizePowerTable& t) {
  std::ostringstream os;
  os << "Setting " << to_string(t.setting) << ", " << t.replications
     << " warp-speed replications\n";
  os << std::left << std::setw(20) << "delta schedule" << std::right << std::setw(7) << "n"
     << std::setw(10) << "delta";
  for (const double s : t.sizes) os << std::setw(10) << ("s=" + num(s, 3));
  os << '\n';
  for (const auto& row : t.rows) {
    os << std::left << std::setw(20) << row.schedule << std::right << std::setw(7) << row.n
       << std::setw(10) << fixed(row.delta, 4);
    for (const double v : row.rates) os << std::setw(10) << fixed(v, 4);
    if (row.flagged) os << "  [" << row.failures << " failed]";
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const ThetaPoint& t) {
  return {{"beta", std::vector<double>(t.beta.begin(), t.beta.end())},
          {"delta", std::vector<double>(t.delta.begin(), t.delta.end())},
          {"tau", t.tau}};
}

nlohmann::json to_json(const FitResult& f) {
  nlohmann::json profile = nlohmann::json::array();
  for (const auto& p : f.profile) profile.push_back({p.tau, p.ssr});
  return {{"constrained", f.constrained},
          {"theta", to_json(f.theta)},
          {"ssr_min", f.ssr_min},
          {"regime", {{"lower", f.regime.n_lower}, {"upper", f.regime.n_upper}}},
          {"grid",
           {{"strategy", to_string(f.grid.strategy)},
            {"trim_fraction", f.grid.trim_fraction},
            {"min_per_regime", f.grid.min_per_regime},
            {"points", f.grid.points.size()}}},
          {"failed_points", f.failed_points},
          {"profile", profile}};
}

nlohmann::json to_json(const RobustSe& se) {
  return {{"names", se.names},
          {"coef", std::vector<double>(se.coef.begin(), se.coef.end())},
          {"se", std::vector<double>(se.se.begin(), se.se.end())}};
}

nlohmann::json to_json(const TestReport& r) {
  return {{"t_n", r.t_n},
          {"p_star", r.p_star},
          {"B", r.boot_stats.size()},
          {"seed", r.seed},
          {"multiplier", to_string(r.multiplier.kind)},
          {"degenerate", r.degenerate},
          {"degenerate_draws", r.degenerate_draws},
          {"boot_stats", r.boot_stats},
          {"fit_unconstrained", to_json(r.fit_u)},
          {"fit_constrained", to_json(r.fit_c)}};
}

nlohmann::json to_json(const SizePowerTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"schedule", r.schedule},
                    {"n", r.n},
                    {"delta", r.delta},
                    {"rates", r.rates},
                    {"failures", r.failures},
                    {"flagged", r.flagged}});
  }
  return {{"setting", to_string(t.setting)},
          {"replications", t.replications},
          {"sizes", t.sizes},
          {"rows", rows}};
}

nlohmann::json to_json(const RateStudyResult& r) {
  return {{"n", r.n_values},
          {"median_abs_error", r.median_abs_error},
          {"mean_abs_error", r.mean_abs_error},
          {"slope", r.slope},
          {"failures", r.failures}};
}

nlohmann::json to_json(const EmpiricsReport& r) {
  return {{"n", r.n},
          {"test", to_json(r.test)},
          {"se_jump", to_json(r.se_jump)},
          {"se_kink", to_json(r.se_kink)},
          {"hinge", to_json(r.hinge)},
          {"residuals_written", r.residuals_written}};
}

std::string table_csv(const SizePowerTable& t) {
  std::ostringstream os;
  os << "schedule,n,delta";
  for (const double s : t.sizes) os << ",s" << num(s, 6);
  os << ",failures,flagged\n";
  for (const auto& r : t.rows) {
    os << '"' << r.schedule << "\"," << r.n << ',' << num(r.delta);
    for (const double v : r.rates) os << ',' << num(v);
    os << ',' << r.failures << ',' << (r.flagged ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace segreg
