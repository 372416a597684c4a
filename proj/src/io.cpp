#include "blockchol/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace blockchol {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.data();
  if (*begin == '+') ++begin;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!parse_number(fields[k], row[k])) {
        numeric = false;
        bad = k;
        break;
      }
    }
    if (first) {
      first = false;
      width = fields.size();
      if (!numeric) {
        table.header = std::move(fields);
        continue;
      }
    }
    if (!numeric) {
      throw InvalidInput("csv line " + std::to_string(line_no) + ", column " +
                         std::to_string(bad + 1) + ": not a number: '" + fields[bad] + "'");
    }
    if (fields.size() != width) {
      throw InvalidInput("csv line " + std::to_string(line_no) + ": expected " +
                         std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("csv: no data rows");
  table.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < width; ++k)
      table.data(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return parse_csv(in);
}

void write_csv(std::ostream& out, const Matrix& data, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
  }
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index k = 0; k < data.cols(); ++k) out << (k ? "," : "") << format_double(data(i, k));
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Matrix& data,
                    const std::vector<std::string>& header) {
  std::ostringstream s;
  write_csv(s, data, header);
  write_text_file(path, s.str());
}

std::string matrix_json(const SymMatrix& omega, const GroupPartition& partition, double lambda1,
                        double lambda2, const std::vector<int>& iterations,
                        const std::vector<bool>& converged) {
  if (partition.total() != omega.dim()) throw InvalidInput("matrix_json: partition mismatch");
  // Written by hand so every number carries 17 significant digits.
  std::string out = "{\n  \"p\": " + std::to_string(omega.dim()) + ",\n  \"groups\": [";
  for (Index j = 0; j < partition.groups(); ++j)
    out += (j ? ", " : "") + std::to_string(partition.size(j));
  out += "],\n  \"lambda1\": " + format_double(lambda1) + ",\n  \"lambda2\": " +
         format_double(lambda2) + ",\n  \"omega\": [";
  bool first = true;
  for (Index i = 0; i < omega.dim(); ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double v = omega(i, j);
      if (v == 0.0) continue;
      out += first ? "\n    [" : ",\n    [";
      first = false;
      out += std::to_string(i) + ", " + std::to_string(j) + ", " + format_double(v) + "]";
    }
  }
  out += first ? "],\n" : "\n  ],\n";
  out += "  \"iterations\": [";
  for (std::size_t k = 0; k < iterations.size(); ++k)
    out += (k ? ", " : "") + std::to_string(iterations[k]);
  out += "],\n  \"converged\": [";
  for (std::size_t k = 0; k < converged.size(); ++k)
    out += std::string(k ? ", " : "") + (converged[k] ? "true" : "false");
  out += "]\n}\n";
  return out;
}

std::string estimate_json(const PrecisionEstimate& est) {
  return matrix_json(est.omega, est.partition, est.lambda1, est.lambda2,
                     est.per_group_iterations, est.converged_flags);
}

EstimateRecord parse_estimate_json(const std::string& text) {
  EstimateRecord rec;
  try {
    const json doc = json::parse(text);
    const auto p = doc.at("p").get<Index>();
    rec.partition = GroupPartition::from_sizes(doc.at("groups").get<std::vector<Index>>());
    if (rec.partition.total() != p) throw InvalidInput("estimate json: groups do not sum to p");
    rec.lambda1 = doc.value("lambda1", 0.0);
    rec.lambda2 = doc.value("lambda2", 0.0);
    Matrix lower = Matrix::Zero(p, p);
    for (const auto& t : doc.at("omega")) {
      const auto i = t.at(0).get<Index>();
      const auto j = t.at(1).get<Index>();
      if (i < 0 || j < 0 || i >= p || j > i) {
        throw InvalidInput("estimate json: triplet index outside the lower triangle");
      }
      lower(i, j) = t.at(2).get<double>();
    }
    rec.omega = SymMatrix::from_lower(lower);
    if (doc.contains("iterations")) rec.iterations = doc["iterations"].get<std::vector<int>>();
    if (doc.contains("converged")) rec.converged = doc["converged"].get<std::vector<bool>>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("estimate json: ") + e.what());
  }
  return rec;
}

EstimateRecord read_estimate_json(const std::string& path) {
  return parse_estimate_json(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text;
  if (!out) throw InvalidInput("write failed for '" + path + "'");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_json(const RunManifest& manifest) {
  json config = json::object();
  for (const auto& [key, value] : manifest.config) config[key] = value;
  const json doc = {{"command", manifest.command},
                    {"seed", manifest.seed},
                    {"config", config},
                    {"tool_version", manifest.tool_version},
                    {"timestamp", manifest.timestamp}};
  return doc.dump(2) + "\n";
}

}  // namespace blockchol
