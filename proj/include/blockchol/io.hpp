#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blockchol/block_model.hpp"

namespace blockchol {

/// 17 significant digits: parses back to the identical double.
std::string format_double(double value);

struct CsvTable {
  std::vector<std::string> header;  // empty when the file had none
  Matrix data;
};

/// Comma separated numeric table. A first row containing any non-numeric
/// field is taken as the header. Ragged rows, empty input and non-numeric
/// data fields throw InvalidInput naming the line.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

void write_csv(std::ostream& out, const Matrix& data, const std::vector<std::string>& header = {});
void write_csv_file(const std::string& path, const Matrix& data,
                    const std::vector<std::string>& header = {});

/// Triplet JSON: {"p", "groups", "lambda1", "lambda2", "omega": [[i, j, v], ...],
/// "iterations", "converged"}; omega lists the exact nonzeros of the lower
/// triangle with 0-based indices.
std::string estimate_json(const PrecisionEstimate& est);
std::string matrix_json(const SymMatrix& omega, const GroupPartition& partition,
                        double lambda1 = 0.0, double lambda2 = 0.0,
                        const std::vector<int>& iterations = {},
                        const std::vector<bool>& converged = {});

struct EstimateRecord {
  GroupPartition partition;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  SymMatrix omega;
  std::vector<int> iterations;
  std::vector<bool> converged;
};

EstimateRecord parse_estimate_json(const std::string& text);
EstimateRecord read_estimate_json(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;  // flag, value
  std::string tool_version;
  std::string timestamp;  // UTC, ISO 8601
};

std::string utc_timestamp();
std::string manifest_json(const RunManifest& manifest);

}  // namespace blockchol
