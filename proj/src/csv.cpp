#include "subsplit/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "subsplit/error.hpp"

namespace subsplit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  field = trim(field);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(Errc::InvalidData,
                path.string() + ":" + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::Io, "cannot open " + path.string());
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(Errc::Io, "cannot write " + path.string());
  }
  return out;
}

void put_double(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

}  // namespace

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const double v = parse_field<double>(rest.substr(0, comma), path, line_no);
      if (!std::isfinite(v)) {
        throw Error(Errc::InvalidData, path.string() + ":" + std::to_string(line_no) + ": non-finite value");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(Errc::InvalidData, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) {
    throw Error(Errc::InvalidData, path.string() + " holds no data rows");
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = values[r * cols + c];
    }
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) {
        out << ',';
      }
      put_double(out, m(r, c));
    }
    out << '\n';
  }
}

std::vector<std::int32_t> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::int32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    labels.push_back(parse_field<std::int32_t>(line, path, line_no));
  }
  return labels;
}

void write_labels_csv(const std::filesystem::path& path, std::span<const std::int32_t> labels) {
  std::ofstream out = open_out(path);
  for (auto v : labels) {
    out << v << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ofstream out = open_out(path);
  out << "iter,k_inferred,log_posterior,nmi,ari,k_mae,elapsed_ms,splits_accepted,merges_accepted\n";
  for (const MetricsRow& r : rows) {
    out << r.iter << ',' << r.k_inferred << ',';
    put_double(out, r.log_posterior);
    out << ',';
    put_double(out, r.nmi);
    out << ',';
    put_double(out, r.ari);
    out << ',';
    put_double(out, r.k_mae);
    out << ',';
    put_double(out, r.elapsed_ms);
    out << ',' << r.splits_accepted << ',' << r.merges_accepted << '\n';
  }
}

}  // namespace subsplit
