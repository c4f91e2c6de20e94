#include "dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace fiddle {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  const bool consumed = end != nullptr && *end == '\0' && end != cell.c_str();
  if (!consumed || errno == ERANGE || !std::isfinite(v))
    fail(ErrorCode::Parse, "load_csv: cell at row " + std::to_string(row) +
                               ", column " + std::to_string(col) +
                               " is not a finite decimal: '" + cell + "'");
  return v;
}

std::string format_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::size_t Dataset::n_treated() const {
  std::size_t c = 0;
  for (int ti : t) c += static_cast<std::size_t>(ti);
  return c;
}

std::size_t Dataset::n_control() const { return n() - n_treated(); }

void Dataset::validate() const {
  require(y.size() == t.size(), ErrorCode::Dimension, "dataset: y/T length mismatch");
  require(x.rows() == y.size(), ErrorCode::Dimension, "dataset: X row count mismatch");
  for (int ti : t)
    require(ti == 0 || ti == 1, ErrorCode::InvalidArgument,
            "dataset: T entries must be 0 or 1");
  num::check_finite(std::span<const double>(y), "dataset y");
  num::check_finite(x, "dataset X");
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "load_csv: cannot open '" + path + "'");

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Parse,
          "load_csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  require(header.size() >= 3 && header[0] == "y" && header[1] == "T",
          ErrorCode::Parse, "load_csv: header must start with 'y,T,x1,...'");

  std::size_t p = 0;
  while (2 + p < header.size() && header[2 + p] == "x" + std::to_string(p + 1)) ++p;
  require(p >= 1, ErrorCode::Parse, "load_csv: expected covariate column 'x1'");

  bool has_pi = false, has_mu = false;
  std::size_t pos = 2 + p;
  if (pos < header.size() && header[pos] == "pi_star") {
    has_pi = true;
    ++pos;
  }
  if (pos + 1 < header.size() && header[pos] == "mu0_star" && header[pos + 1] == "mu1_star") {
    has_mu = true;
    pos += 2;
  }
  require(pos == header.size(), ErrorCode::Parse,
          "load_csv: unrecognized header column '" + header[std::min(pos, header.size() - 1)] + "'");

  const std::size_t ncols = header.size();
  std::vector<double> ys;
  std::vector<int> ts;
  std::vector<double> xs;
  std::vector<double> pis, mu0s, mu1s;

  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    require(cells.size() == ncols, ErrorCode::Parse,
            "load_csv: row " + std::to_string(row) + " has " +
                std::to_string(cells.size()) + " cells, expected " +
                std::to_string(ncols));

    ys.push_back(parse_cell(cells[0], row, 1));
    const double tv = parse_cell(cells[1], row, 2);
    require(tv == 0.0 || tv == 1.0, ErrorCode::Parse,
            "load_csv: non-binary T at row " + std::to_string(row));
    ts.push_back(static_cast<int>(tv));
    for (std::size_t j = 0; j < p; ++j)
      xs.push_back(parse_cell(cells[2 + j], row, 3 + j));
    std::size_t c = 2 + p;
    if (has_pi) pis.push_back(parse_cell(cells[c], row, c + 1)), ++c;
    if (has_mu) {
      mu0s.push_back(parse_cell(cells[c], row, c + 1));
      mu1s.push_back(parse_cell(cells[c + 1], row, c + 2));
    }
  }
  require(!ys.empty(), ErrorCode::Parse, "load_csv: no data rows");

  Dataset data;
  data.y = std::move(ys);
  data.t = std::move(ts);
  data.x = num::Matrix(data.y.size(), p);
  data.x.data() = std::move(xs);
  data.pi_star = std::move(pis);
  data.mu0_star = std::move(mu0s);
  data.mu1_star = std::move(mu1s);
  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::string& path, bool include_oracle) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "save_csv: cannot open '" + path + "' for writing");

  const bool write_pi = include_oracle && data.has_pi_star();
  const bool write_mu = include_oracle && data.has_outcome_oracles();

  out << "y,T";
  for (std::size_t j = 1; j <= data.p(); ++j) out << ",x" << j;
  if (write_pi) out << ",pi_star";
  if (write_mu) out << ",mu0_star,mu1_star";
  out << "\n";

  for (std::size_t i = 0; i < data.n(); ++i) {
    out << format_cell(data.y[i]) << ',' << data.t[i];
    for (std::size_t j = 0; j < data.p(); ++j) out << ',' << format_cell(data.x(i, j));
    if (write_pi) out << ',' << format_cell(data.pi_star[i]);
    if (write_mu)
      out << ',' << format_cell(data.mu0_star[i]) << ',' << format_cell(data.mu1_star[i]);
    out << "\n";
  }
  require(out.good(), ErrorCode::Io, "save_csv: write failed for '" + path + "'");
}

}  // namespace fiddle
