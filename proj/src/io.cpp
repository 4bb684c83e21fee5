#include "selbayes/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "selbayes/errors.hpp"

namespace selbayes {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (first_line && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    first_line = false;
    if (trim(line).empty()) continue;
    rows.push_back(split_fields(line));
  }
  require(!rows.empty(), ErrorKind::malformed_input, source + ": no data rows");

  CsvTable table;
  double probe = 0.0;
  bool header = false;
  for (const auto& field : rows.front()) {
    if (!parse_number(field, probe)) header = true;
  }
  std::size_t first_data = 0;
  if (header) {
    table.header = rows.front();
    first_data = 1;
  }
  require(rows.size() > first_data, ErrorKind::malformed_input, source + ": no data rows");

  const std::size_t cols = rows[first_data].size();
  require(!header || table.header.size() == cols, ErrorKind::malformed_input,
          source + ": header has " + std::to_string(table.header.size()) + " fields but data has " +
              std::to_string(cols));
  table.values.resize(static_cast<Index>(rows.size() - first_data), static_cast<Index>(cols));
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line_no = r + 1;
    require(row.size() == cols, ErrorKind::malformed_input,
            source + ": line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                " fields, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      require(parse_number(row[c], v) && std::isfinite(v), ErrorKind::malformed_input,
              source + ": line " + std::to_string(line_no) + " field " + std::to_string(c + 1) +
                  " is not a finite number: '" + row[c] + "'");
      table.values(static_cast<Index>(r - first_data), static_cast<Index>(c)) = v;
    }
  }
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

MatrixXd read_matrix_csv(const std::string& path) { return read_csv(path).values; }

VectorXd read_vector_csv(const std::string& path) {
  const MatrixXd m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  fail(ErrorKind::malformed_input, path + ": expected a single column or row, found " +
                                       std::to_string(m.rows()) + " x " +
                                       std::to_string(m.cols()));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::malformed_input, path + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::malformed_input, path + ": cannot open for writing");
  out << contents;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::malformed_input, path + ": write failed");
}

std::string git_blob_hash(const std::string& contents) {
  const std::string prefix = "blob " + std::to_string(contents.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, ErrorKind::internal, "git_blob_hash: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx, contents.data(), contents.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  require(ok, ErrorKind::internal, "git_blob_hash: digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

}  // namespace selbayes
