// SPDX-License-Identifier: Apache-2.0
#include <piann/csv.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace piann {

std::size_t CsvTable::column(const std::string &name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name)
      return c;
  throw std::out_of_range("csv has no column '" + name + "'");
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream &out, const CsvTable &table) {
  for (std::size_t c = 0; c < table.header.size(); ++c)
    out << (c ? "," : "") << table.header[c];
  out << '\n';
  for (const auto &row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("csv row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

std::string to_csv(const CsvTable &table) {
  std::ostringstream out;
  write_csv(out, table);
  return out.str();
}

namespace {

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  return cells;
}

} // namespace

CsvTable parse_csv(const std::string &text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("csv is empty");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  table.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw std::runtime_error("csv line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, expected " +
                               std::to_string(table.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto &s = cells[c];
      auto res = std::from_chars(s.data(), s.data() + s.size(), row[c]);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("csv line " + std::to_string(line_no) +
                                 ": not a number '" + s + "'");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void save_csv(const std::filesystem::path &path, const CsvTable &table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(out, table);
  if (!out)
    throw std::runtime_error("failed writing '" + path.string() + "'");
}

CsvTable load_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_csv(text.str());
}

} // namespace piann
