#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "error.hpp"
#include "synthdata.hpp"

namespace modalreg {

using json = nlohmann::json;

//! 17 significant digits, so every double reads back to the same bits and
//! re-serializes to the same text.
inline std::string
format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

//! Comma-separated numeric table with a header row.
struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const
  {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name)
        return c;
    throw InvalidArgument("csv: no column named '" + name + "'");
  }
};

namespace detail {
inline std::vector<std::string>
split_csv_line(const std::string& line)
{
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  if (line.empty())
    cells.emplace_back();
  return cells;
}

inline std::string
trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}
} // namespace detail

//! Rows and columns in errors are 1-based; the header is row 1.
inline CsvTable
read_table(std::istream& in)
{
  CsvTable t;
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && detail::trim(lines.back()).empty())
    lines.pop_back();
  if (lines.empty())
    throw ParseError("csv: missing header row", 1, 0);
  for (const std::string& l : lines) {
    ++row;
    auto cells = detail::split_csv_line(l);
    if (row == 1) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        std::string name = detail::trim(cells[c]);
        if (c == 0 && name.size() >= 3 && name.compare(0, 3, "\xEF\xBB\xBF") == 0)
          name = name.substr(3);
        if (name.empty())
          throw ParseError("csv: empty column name", row, c + 1);
        t.header.push_back(name);
      }
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(t.header.size()),
                       row,
                       std::min(cells.size(), t.header.size()) + 1);
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string s = detail::trim(cells[c]);
      char* end = nullptr;
      errno = 0;
      values[c] = s.empty() ? 0.0 : std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ParseError("csv: cell '" + s + "' is not a number", row, c + 1);
    }
    t.rows.push_back(std::move(values));
  }
  return t;
}

inline void
write_table(std::ostream& out, const CsvTable& t)
{
  for (std::size_t c = 0; c < t.header.size(); ++c)
    out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c)
      out << (c ? "," : "") << format_number(r[c]);
    out << '\n';
  }
}

inline CsvTable
read_table_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidArgument("cannot open '" + path + "' for reading");
  return read_table(in);
}

inline void
write_text_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InvalidArgument("cannot open '" + path + "' for writing");
  out << text;
  if (!out)
    throw InvalidArgument("write to '" + path + "' failed");
}

//! Observations from a table with header x1, ..., xd, y.
inline DataSet
table_to_data(const CsvTable& t)
{
  const std::size_t m = t.header.size();
  if (m < 2)
    throw ParseError("csv: need columns x1..xd and y", 1, 0);
  for (std::size_t c = 0; c + 1 < m; ++c)
    if (t.header[c] != "x" + std::to_string(c + 1))
      throw ParseError("csv: expected column 'x" + std::to_string(c + 1) + "'", 1, c + 1);
  if (t.header.back() != "y")
    throw ParseError("csv: the last column must be 'y'", 1, m);
  if (t.rows.empty())
    throw ParseError("csv: no observations", 2, 0);
  const std::size_t d = m - 1;
  std::vector<double> coords, ys;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t c = 0; c < m; ++c)
      if (!std::isfinite(t.rows[i][c]))
        throw ParseError("csv: non-finite value", i + 2, c + 1);
    coords.insert(coords.end(), t.rows[i].begin(), t.rows[i].end() - 1);
    ys.push_back(t.rows[i].back());
  }
  return DataSet(PointSet(d, std::move(coords)), std::move(ys));
}

inline CsvTable
data_to_table(const DataSet& data)
{
  CsvTable t;
  for (std::size_t k = 0; k < data.dim(); ++k)
    t.header.push_back("x" + std::to_string(k + 1));
  t.header.push_back("y");
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto x = data.x(i);
    std::vector<double> r(x.begin(), x.end());
    r.push_back(data.y(i));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline DataSet
read_data(std::istream& in)
{
  return table_to_data(read_table(in));
}

inline DataSet
read_data_file(const std::string& path)
{
  return table_to_data(read_table_file(path));
}

inline std::string
to_csv(const CsvTable& t)
{
  std::ostringstream s;
  write_table(s, t);
  return s.str();
}

//! Non-finite numbers become the strings "inf", "-inf" and "nan".
inline json
json_number(double v)
{
  if (std::isfinite(v))
    return v;
  return format_number(v);
}

// Design files. A mixture design:
//   {"type": "mixture",
//    "x": [{"dist": "uniform", "lo": 0, "hi": 1}],
//    "components": [{"weight": 0.5, "sd": 0.25,
//                    "mean": {"offset": 0, "linear": [1], "quadratic": [],
//                             "sin_amplitude": 0, "sin_frequency": 0},
//                    "support": [0, 0.5]}]}
// A Gaussian design: {"type": "gaussian", "mean": [...], "cov": [...]} with
// the covariance row-major over (x1..xd, y). "normal" covariates use "mean"
// and "sd" instead of "lo" and "hi".

inline json
design_to_json(const Design& design)
{
  if (const auto* g = std::get_if<GaussianJointSpec>(&design))
    return { { "type", "gaussian" }, { "mean", g->mean }, { "cov", g->cov } };
  const auto& s = std::get<GmSpec>(design);
  json xs = json::array();
  for (const auto& x : s.x) {
    if (x.kind == XDistribution::Kind::uniform)
      xs.push_back({ { "dist", "uniform" }, { "lo", x.a }, { "hi", x.b } });
    else
      xs.push_back({ { "dist", "normal" }, { "mean", x.a }, { "sd", x.b } });
  }
  json comps = json::array();
  for (const auto& c : s.components) {
    json m = { { "offset", c.mean.offset },
               { "linear", c.mean.linear },
               { "quadratic", c.mean.quadratic },
               { "sin_amplitude", c.mean.sin_amplitude },
               { "sin_frequency", c.mean.sin_frequency } };
    json j = { { "weight", c.weight }, { "sd", c.sd }, { "mean", m } };
    if (c.support)
      j["support"] = { c.support->lo, c.support->hi };
    comps.push_back(j);
  }
  return { { "type", "mixture" }, { "x", xs }, { "components", comps } };
}

inline Design
design_from_json(const json& j)
{
  Design out;
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "gaussian") {
      out = GaussianJointSpec{ j.at("mean").get<std::vector<double>>(), j.at("cov").get<std::vector<double>>() };
    } else if (type == "mixture") {
      GmSpec s;
      for (const auto& x : j.at("x")) {
        XDistribution xd;
        const std::string dist = x.at("dist").get<std::string>();
        if (dist == "uniform") {
          xd.kind = XDistribution::Kind::uniform;
          xd.a = x.at("lo").get<double>();
          xd.b = x.at("hi").get<double>();
        } else if (dist == "normal") {
          xd.kind = XDistribution::Kind::normal;
          xd.a = x.at("mean").get<double>();
          xd.b = x.at("sd").get<double>();
        } else {
          throw ParseError("design: unknown covariate distribution '" + dist + "'", 0, 0);
        }
        s.x.push_back(xd);
      }
      for (const auto& c : j.at("components")) {
        Component comp;
        comp.weight = c.at("weight").get<double>();
        comp.sd = c.at("sd").get<double>();
        if (c.contains("mean")) {
          const json& m = c.at("mean");
          comp.mean.offset = m.value("offset", 0.0);
          comp.mean.linear = m.value("linear", std::vector<double>{});
          comp.mean.quadratic = m.value("quadratic", std::vector<double>{});
          comp.mean.sin_amplitude = m.value("sin_amplitude", 0.0);
          comp.mean.sin_frequency = m.value("sin_frequency", 0.0);
        }
        if (c.contains("support")) {
          const auto b = c.at("support").get<std::vector<double>>();
          if (b.size() != 2)
            throw ParseError("design: support must be [lo, hi]", 0, 0);
          comp.support = Interval{ b[0], b[1] };
        }
        s.components.push_back(comp);
      }
      out = s;
    } else {
      throw ParseError("design: unknown type '" + type + "'", 0, 0);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("design: ") + e.what(), 0, 0);
  }
  validate(out);
  return out;
}

inline Design
read_design_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidArgument("cannot open '" + path + "' for reading");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("design: ") + e.what(), 0, 0);
  }
  return design_from_json(j);
}

} // namespace modalreg
