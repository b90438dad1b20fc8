#include "splinecop/observations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "splinecop/error.hpp"

namespace splinecop {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_cell(std::string_view cell, std::size_t row, std::string_view column) {
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw Error(Errc::malformed_data, "row " + std::to_string(row) + ", column '" +
                                          std::string(column) + "': non-numeric cell '" +
                                          std::string(cell) + "'");
  }
  return value;
}

}  // namespace

void ObservationSet::validate() const {
  if (v.size() != u.size()) throw Error(Errc::malformed_data, "u and v differ in length");
  if (x.cols() > 0 && static_cast<std::size_t>(x.rows()) != u.size()) {
    throw Error(Errc::malformed_data, "covariate rows differ from observation count");
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    // Rows are reported 1-based, matching the data rows of the file.
    const std::string row = std::to_string(i + 1);
    if (!(u[i] > 0.0 && u[i] < 1.0)) {
      throw Error(Errc::malformed_data, "row " + row + ": u = " + format_double(u[i]) +
                                            " is outside (0,1)");
    }
    if (!(v[i] > 0.0 && v[i] < 1.0)) {
      throw Error(Errc::malformed_data, "row " + row + ": v = " + format_double(v[i]) +
                                            " is outside (0,1)");
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double xv = x(static_cast<Eigen::Index>(i), j);
      if (!(xv >= 0.0 && xv <= 1.0)) {
        throw Error(Errc::malformed_data, "row " + row + ": covariate " +
                                              std::to_string(j + 1) + " outside [0,1]");
      }
    }
  }
}

ObservationSet parse_observations(const std::string& text,
                                  const std::vector<std::string>& covariate_columns) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::size_t data_row = 0;

  int iu = -1, iv = -1;
  std::vector<int> ix;

  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split(t);
    if (!have_header) {
      for (auto c : cells) header.emplace_back(c);
      have_header = true;
      auto find = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
      };
      iu = find("u");
      iv = find("v");
      if (iu < 0 || iv < 0) throw Error(Errc::malformed_data, "header lacks columns 'u' and 'v'");
      if (covariate_columns.empty()) {
        for (int c = 0; c < static_cast<int>(header.size()); ++c) {
          if (c != iu && c != iv) ix.push_back(c);
        }
      } else {
        for (const auto& name : covariate_columns) {
          const int c = find(name);
          if (c < 0) throw Error(Errc::malformed_data, "missing covariate column '" + name + "'");
          ix.push_back(c);
        }
      }
      continue;
    }
    ++data_row;
    if (cells.size() != header.size()) {
      throw Error(Errc::malformed_data, "row " + std::to_string(data_row) + ": expected " +
                                            std::to_string(header.size()) + " cells, got " +
                                            std::to_string(cells.size()));
    }
    std::vector<double> r(header.size());
    for (std::size_t c = 0; c < cells.size(); ++c) r[c] = parse_cell(cells[c], data_row, header[c]);
    rows.push_back(std::move(r));
  }
  if (!have_header) throw Error(Errc::malformed_data, "no header row");

  ObservationSet out;
  const auto n = rows.size();
  out.u.resize(n);
  out.v.resize(n);
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ix.size()));
  for (std::size_t i = 0; i < n; ++i) {
    out.u[i] = rows[i][iu];
    out.v[i] = rows[i][iv];
    for (std::size_t j = 0; j < ix.size(); ++j) {
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][ix[j]];
    }
  }
  for (std::size_t j = 0; j < ix.size(); ++j) {
    out.covariate_names.push_back(header[ix[j]]);
    auto col = out.x.col(static_cast<Eigen::Index>(j));
    AffineMap map;
    if (n > 0 && col.allFinite()) {
      const double lo = col.minCoeff();
      const double hi = col.maxCoeff();
      if (lo < 0.0 || hi > 1.0) {
        if (!(hi > lo)) {
          throw Error(Errc::malformed_data, "covariate '" + header[ix[j]] + "' is constant");
        }
        map = AffineMap{lo, hi - lo};
        for (Eigen::Index i = 0; i < col.size(); ++i) {
          // Clamp rounding so the extremes land exactly on 0 and 1.
          col[i] = std::clamp(map.apply(col[i]), 0.0, 1.0);
        }
      }
    }
    out.covariate_maps.push_back(map);
  }
  out.validate();
  return out;
}

ObservationSet ingest_observations(const std::filesystem::path& path,
                                   const std::vector<std::string>& covariate_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::malformed_data, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_observations(ss.str(), covariate_columns);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_observations(const ObservationSet& data,
                                const std::vector<std::string>& header_comments) {
  std::string out;
  for (const auto& c : header_comments) out += "# " + c + "\n";
  out += "u,v";
  for (int j = 0; j < data.covariates(); ++j) {
    out += ",";
    out += j < static_cast<int>(data.covariate_names.size()) ? data.covariate_names[j]
                                                             : "x" + std::to_string(j + 1);
  }
  out += "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += format_double(data.u[i]);
    out += ",";
    out += format_double(data.v[i]);
    for (int j = 0; j < data.covariates(); ++j) {
      out += ",";
      out += format_double(data.x(static_cast<Eigen::Index>(i), j));
    }
    out += "\n";
  }
  return out;
}

void write_observations(const std::filesystem::path& path, const ObservationSet& data,
                        const std::vector<std::string>& header_comments) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::malformed_data, "cannot write " + path.string());
  out << format_observations(data, header_comments);
}

}  // namespace splinecop
