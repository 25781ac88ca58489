#include <ppcr/io.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/LU>

#include <ppcr/error.hpp>

namespace ppcr::io {

namespace {

std::string display(const std::filesystem::path& path) {
  return path.string();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + display(path) + " for reading");
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + display(path) + " for writing");
  }
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw IoError("failed writing " + display(path));
  }
}

/// Line reader that tracks 1-based line numbers and strips a trailing '\r'.
class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) {
      return false;
    }
    line_++;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    return true;
  }

  std::size_t line() const { return line_; }

private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      i++;
    }
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
      i++;
    }
    if (i > start) {
      tokens.push_back(text.substr(start, i - start));
    }
  }
  return tokens;
}

std::vector<std::string_view> split_char(std::string_view text, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(delimiter, start);
    fields.push_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) {
      return fields;
    }
    start = end + 1;
  }
}

std::string_view strip_comment(std::string_view line) {
  const std::size_t hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::optional<double> to_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') {
    token.remove_prefix(1);
  }
  double value = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size()) {
    return std::nullopt;
  }
  return value;
}

double parse_finite(const std::filesystem::path& path, std::size_t line, std::string_view token) {
  const auto value = to_double(token);
  if (!value) {
    throw ParseError(display(path), line, "not a number: '" + std::string(token) + "'");
  }
  if (!std::isfinite(*value)) {
    throw ParseError(display(path), line, "non-finite value: '" + std::string(token) + "'");
  }
  return *value;
}

int parse_int(const std::filesystem::path& path, std::size_t line, std::string_view token) {
  int value = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size()) {
    throw ParseError(display(path), line, "not an integer: '" + std::string(token) + "'");
  }
  return value;
}

Point3 parse_point(const std::filesystem::path& path, std::size_t line, std::span<const std::string_view> tokens) {
  return Point3(parse_finite(path, line, tokens[0]), parse_finite(path, line, tokens[1]), parse_finite(path, line, tokens[2]));
}

std::string format_with(double value, int digits) {
  std::array<char, 64> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%.*g", digits, value);
  return buffer.data();
}

PointCloud read_xyz(const std::filesystem::path& path) {
  auto in = open_input(path);
  LineReader reader(in);
  PointCloud cloud;
  std::string line;
  while (reader.next(line)) {
    const auto tokens = split_whitespace(strip_comment(line));
    if (tokens.empty()) {
      continue;
    }
    if (tokens.size() != 3) {
      throw ParseError(display(path), reader.line(), "expected 3 coordinates, found " + std::to_string(tokens.size()) + " tokens");
    }
    cloud.push_back(parse_point(path, reader.line(), tokens));
  }
  if (cloud.empty()) {
    throw ParseError(display(path), reader.line() + 1, "file contains no points");
  }
  return cloud;
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  std::vector<std::string> types;
  bool has_list = false;
};

bool is_float_type(std::string_view type) {
  return type == "float" || type == "float32" || type == "double" || type == "float64";
}

PointCloud read_ply(const std::filesystem::path& path) {
  auto in = open_input(path);
  LineReader reader(in);
  std::string line;
  const auto fail = [&](const std::string& what) { throw ParseError(display(path), reader.line(), what); };

  if (!reader.next(line) || line != "ply") {
    fail("missing 'ply' magic line");
  }
  if (!reader.next(line)) {
    fail("missing format line");
  }
  {
    const auto tokens = split_whitespace(line);
    if (tokens.size() != 3 || tokens[0] != "format") {
      fail("malformed format line");
    }
    if (tokens[1] != "ascii") {
      fail("unsupported PLY format '" + std::string(tokens[1]) + "' (only ascii)");
    }
    if (tokens[2] != "1.0") {
      fail("unsupported PLY version '" + std::string(tokens[2]) + "'");
    }
  }

  std::vector<PlyElement> elements;
  bool ended = false;
  while (reader.next(line)) {
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) {
      fail("blank line in header");
    }
    if (tokens[0] == "comment" || tokens[0] == "obj_info") {
      continue;
    }
    if (tokens[0] == "end_header") {
      ended = true;
      break;
    }
    if (tokens[0] == "element") {
      if (tokens.size() != 3) {
        fail("malformed element line");
      }
      const int count = parse_int(path, reader.line(), tokens[2]);
      if (count < 0) {
        fail("negative element count");
      }
      PlyElement element;
      element.name = std::string(tokens[1]);
      element.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(element));
      continue;
    }
    if (tokens[0] == "property") {
      if (elements.empty()) {
        fail("property before any element");
      }
      auto& element = elements.back();
      if (tokens.size() == 5 && tokens[1] == "list") {
        element.has_list = true;
        element.types.emplace_back("list");
        element.properties.emplace_back(tokens[4]);
      } else if (tokens.size() == 3) {
        element.types.emplace_back(tokens[1]);
        element.properties.emplace_back(tokens[2]);
      } else {
        fail("malformed property line");
      }
      continue;
    }
    fail("unexpected header keyword '" + std::string(tokens[0]) + "'");
  }
  if (!ended) {
    throw ParseError(display(path), reader.line() + 1, "missing end_header");
  }

  const auto vertex = std::find_if(elements.begin(), elements.end(), [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) {
    throw ParseError(display(path), reader.line(), "no vertex element declared");
  }
  static constexpr std::array<std::string_view, 3> kAxes{"x", "y", "z"};
  for (std::size_t i = 0; i < kAxes.size(); i++) {
    if (vertex->properties.size() <= i || vertex->properties[i] != kAxes[i] || !is_float_type(vertex->types[i])) {
      throw ParseError(display(path), reader.line(), "vertex properties must start with float x, y, z");
    }
  }
  if (vertex->count == 0) {
    throw ParseError(display(path), reader.line(), "vertex element is empty");
  }

  // Elements declared before the vertices occupy one line per item.
  for (auto e = elements.begin(); e != vertex; ++e) {
    for (std::size_t i = 0; i < e->count; i++) {
      if (!reader.next(line)) {
        throw ParseError(display(path), reader.line() + 1, "unexpected end of file in element '" + e->name + "'");
      }
    }
  }

  PointCloud cloud;
  cloud.reserve(vertex->count);
  while (cloud.size() < vertex->count) {
    if (!reader.next(line)) {
      throw ParseError(
        display(path),
        reader.line() + 1,
        "expected " + std::to_string(vertex->count) + " vertices, found " + std::to_string(cloud.size()));
    }
    const auto tokens = split_whitespace(line);
    if (tokens.size() < 3 || (!vertex->has_list && tokens.size() != vertex->properties.size())) {
      fail("expected " + std::to_string(vertex->properties.size()) + " vertex values, found " + std::to_string(tokens.size()));
    }
    cloud.push_back(parse_point(path, reader.line(), tokens));
  }
  return cloud;
}

}  // namespace

std::string format_number(double value) {
  return format_with(value, 9);
}

CloudFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".ply" ? CloudFormat::PlyAscii : CloudFormat::Xyz;
}

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  return format == CloudFormat::PlyAscii ? read_ply(path) : read_xyz(path);
}

PointCloud read_cloud(const std::filesystem::path& path) {
  return read_cloud(path, format_from_extension(path));
}

void write_cloud(const std::filesystem::path& path, std::span<const Point3> cloud, CloudFormat format) {
  auto out = open_output(path);
  if (format == CloudFormat::PlyAscii) {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  }
  for (const auto& p : cloud) {
    out << format_number(p.x()) << ' ' << format_number(p.y()) << ' ' << format_number(p.z()) << '\n';
  }
  finish(out, path);
}

RigidTransform read_transform(const std::filesystem::path& path) {
  auto in = open_input(path);
  LineReader reader(in);
  Eigen::Matrix4d m;
  std::string line;
  int row = 0;
  while (reader.next(line)) {
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) {
      continue;
    }
    if (row == 4) {
      throw ParseError(display(path), reader.line(), "unexpected content after the 4x4 matrix");
    }
    if (tokens.size() != 4) {
      throw ParseError(display(path), reader.line(), "expected 4 numbers, found " + std::to_string(tokens.size()));
    }
    for (int c = 0; c < 4; c++) {
      m(row, c) = parse_finite(path, reader.line(), tokens[c]);
    }
    if (row == 3 && (m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
      throw ParseError(display(path), reader.line(), "last row must be 0 0 0 1");
    }
    row++;
  }
  if (row < 4) {
    throw ParseError(display(path), reader.line() + 1, "expected 4 matrix rows, found " + std::to_string(row));
  }

  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double off_manifold = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (off_manifold > 1e-3 || r.determinant() <= 0.0) {
    throw ParseError(display(path), 1, "rotation block is not a rotation (orthonormality error " + format_number(off_manifold) + ")");
  }
  return RigidTransform::from_matrix_nearest(m);
}

void write_transform(const std::filesystem::path& path, const RigidTransform& transform) {
  auto out = open_output(path);
  const Eigen::Matrix4d m = transform.matrix();
  for (int r = 0; r < 4; r++) {
    for (int c = 0; c < 4; c++) {
      out << (c ? " " : "") << format_with(m(r, c), 17);
    }
    out << '\n';
  }
  finish(out, path);
}

void write_trace(const std::filesystem::path& path, std::span<const IterationRecord> trace) {
  auto out = open_output(path);
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.iteration << ',' << format_number(r.initial_cost) << ',' << format_number(r.final_cost) << ',' << format_number(r.cost_drop) << ','
        << r.successful_steps << ',' << (r.mse_prev ? format_number(*r.mse_prev) : "") << ','
        << (r.mse_ground_truth ? format_number(*r.mse_ground_truth) : "") << '\n';
  }
  finish(out, path);
}

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  auto in = open_input(path);
  LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != kTraceHeader) {
    throw ParseError(display(path), reader.line() == 0 ? 1 : reader.line(), "missing or unexpected trace header");
  }
  const auto optional_number = [&](std::string_view field) -> std::optional<double> {
    if (field.empty()) {
      return std::nullopt;
    }
    return parse_finite(path, reader.line(), field);
  };

  std::vector<TraceRow> rows;
  while (reader.next(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = split_char(line, ',');
    if (fields.size() != 7) {
      throw ParseError(display(path), reader.line(), "expected 7 fields, found " + std::to_string(fields.size()));
    }
    TraceRow row;
    row.iteration = parse_int(path, reader.line(), fields[0]);
    row.initial_cost = parse_finite(path, reader.line(), fields[1]);
    row.final_cost = parse_finite(path, reader.line(), fields[2]);
    row.cost_drop = parse_finite(path, reader.line(), fields[3]);
    row.successful_steps = parse_int(path, reader.line(), fields[4]);
    row.mse_prev = optional_number(fields[5]);
    row.mse_gt = optional_number(fields[6]);
    rows.push_back(row);
  }
  return rows;
}

void write_summary(const std::filesystem::path& path, const EvaluationSummary& summary) {
  auto out = open_output(path);
  out << kSummaryHeader << '\n'
      << summary.count << ',' << format_number(summary.median) << ',' << format_number(summary.q75) << ',' << format_number(summary.q95) << ','
      << format_number(summary.mean_iterations) << '\n';
  finish(out, path);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  LineReader reader(in);
  const std::filesystem::path base = path.parent_path();
  const auto resolve = [&](std::string_view token) {
    std::filesystem::path p{std::string(token)};
    return p.is_absolute() ? p : base / p;
  };

  std::vector<ManifestEntry> entries;
  std::string line;
  while (reader.next(line)) {
    const auto tokens = split_whitespace(strip_comment(line));
    if (tokens.empty()) {
      continue;
    }
    if (tokens.size() != 3) {
      throw ParseError(display(path), reader.line(), "expected 'source target ground_truth', found " + std::to_string(tokens.size()) + " paths");
    }
    entries.push_back(ManifestEntry{reader.line(), resolve(tokens[0]), resolve(tokens[1]), resolve(tokens[2])});
  }
  return entries;
}

}  // namespace ppcr::io
