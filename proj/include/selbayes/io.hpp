#pragma once

#include <string>
#include <vector>

#include "selbayes/core.hpp"

namespace selbayes {

// Comma-separated numbers, one observation per row. A first row with any
// non-numeric field is taken as a header.
struct CsvTable {
  std::vector<std::string> header;
  MatrixXd values;
};

CsvTable parse_csv(const std::string& text, const std::string& source = "<memory>");
CsvTable read_csv(const std::string& path);
MatrixXd read_matrix_csv(const std::string& path);
// Accepts a single column or a single row.
VectorXd read_vector_csv(const std::string& path);

std::string read_file(const std::string& path);
// Throws malformed_input if the file cannot be written.
void write_file(const std::string& path, const std::string& contents);

// Hex SHA-1 of "blob <size>\0" + contents, identical to `git hash-object`.
std::string git_blob_hash(const std::string& contents);

}  // namespace selbayes
