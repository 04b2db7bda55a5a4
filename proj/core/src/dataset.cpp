#include "btnv/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include "btnv/errors.hpp"

namespace btnv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw ParseError("non-numeric field '" + std::string(field) + "'", line);
  if (!std::isfinite(value)) throw ParseError("non-finite value", line);
  return value;
}

}  // namespace

void Dataset::validate() const {
  if (u.size() != y.size()) throw DomainError("dataset: u and y must have equal lengths");
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (!std::isfinite(u[n]) || !std::isfinite(y[n]))
      throw DomainError("dataset: non-finite value at sample " + std::to_string(n));
  }
  if (split && (*split == 0 || *split > u.size()))
    throw DomainError("dataset: split must lie in [1, N]");
}

Dataset Dataset::estimation() const {
  const std::size_t end = split.value_or(size());
  return {{u.begin(), u.begin() + static_cast<std::ptrdiff_t>(end)},
          {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(end)},
          std::nullopt};
}

Dataset Dataset::validation() const {
  const std::size_t begin = split.value_or(size());
  return {{u.begin() + static_cast<std::ptrdiff_t>(begin), u.end()},
          {y.begin() + static_cast<std::ptrdiff_t>(begin), y.end()},
          std::nullopt};
}

Dataset read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::string header;
    for (char c : line)
      if (c != ' ' && c != '\t' && c != '\r') header.push_back(c);
    if (header != "u,y") throw ParseError("expected header 'u,y'", line_no);
    have_header = true;
  }
  if (!have_header) throw ParseError("missing header 'u,y'", line_no + 1);

  Dataset data;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
      throw ParseError("expected exactly two columns", line_no);
    data.u.push_back(parse_number(row.substr(0, comma), line_no));
    data.y.push_back(parse_number(row.substr(comma + 1), line_no));
  }
  if (data.u.empty()) throw ParseError("dataset has no samples", line_no);
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  out << "u,y\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t n = 0; n < data.size(); ++n) out << data.u[n] << ',' << data.y[n] << '\n';
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, data);
}

NormalizationRecord fit_normalization(const Dataset& data,
                                      std::optional<std::size_t> estimation_count) {
  data.validate();
  const std::size_t n = estimation_count.value_or(data.size());
  if (n == 0 || n > data.size()) throw DomainError("normalize: invalid estimation range");

  NormalizationRecord rec;
  rec.input_min = data.u[0];
  rec.input_max = data.u[0];
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rec.input_min = std::min(rec.input_min, data.u[i]);
    rec.input_max = std::max(rec.input_max, data.u[i]);
    sum += data.y[i];
  }
  rec.output_mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (data.y[i] - rec.output_mean) * (data.y[i] - rec.output_mean);
  rec.output_std = std::sqrt(ss / static_cast<double>(n));

  if (!(rec.input_max > rec.input_min))
    throw DomainError("normalize: input is constant on the estimation samples");
  if (!(rec.output_std > 0.0))
    throw DomainError("normalize: output is constant on the estimation samples");
  return rec;
}

Dataset apply_normalization(const Dataset& data, const NormalizationRecord& record) {
  Dataset out = data;
  for (auto& v : out.u) v = record.normalize_input(v);
  for (auto& v : out.y) v = record.normalize_output(v);
  return out;
}

std::pair<Dataset, NormalizationRecord> normalize(const Dataset& data) {
  const auto record = fit_normalization(data, data.split);
  return {apply_normalization(data, record), record};
}

}  // namespace btnv
