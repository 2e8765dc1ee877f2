#include "betrun/checkpoint.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace betrun {
namespace {

bool parse_u64(std::string_view text, std::uint64_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_i64(std::string_view text, std::int64_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_real(std::string_view text, double& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// `# subject=<id> seed=<u64> schema=<name>:<dir>;...` with whitespace-free
// tokens. Subject ids therefore must not contain spaces; the suite builder
// enforces that.
bool parse_header_line(std::string_view line, CheckpointHeader& header) {
  std::istringstream in{std::string(line)};
  std::string token;
  in >> token;  // leading '#'
  bool saw_subject = false, saw_seed = false, saw_schema = false;
  while (in >> token) {
    std::size_t eq = token.find('=');
    if (eq == std::string::npos) return false;
    std::string key = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (key == "subject") {
      header.subject = value;
      saw_subject = true;
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      if (!parse_u64(value, seed)) return false;
      header.seed = seed;
      saw_seed = true;
    } else if (key == "schema") {
      header.schema.metrics.clear();
      for (std::string_view entry : split(value, ';')) {
        if (entry.empty()) return false;
        std::size_t colon = entry.find(':');
        if (colon == std::string_view::npos) return false;
        MetricSpec spec;
        spec.name = std::string(entry.substr(0, colon));
        try {
          spec.direction = direction_from_string(std::string(entry.substr(colon + 1)));
        } catch (const ConfigError&) {
          return false;
        }
        header.schema.metrics.push_back(std::move(spec));
      }
      saw_schema = true;
    } else {
      return false;
    }
  }
  return saw_subject && saw_seed && saw_schema;
}

bool parse_record_line(std::string_view line, CheckpointRecord& record) {
  // Three fixed fields, then an optional semicolon-joined metric blob.
  std::size_t c1 = line.find(',');
  if (c1 == std::string_view::npos) return false;
  std::size_t c2 = line.find(',', c1 + 1);
  if (c2 == std::string_view::npos) return false;
  std::size_t c3 = line.find(',', c2 + 1);

  std::int64_t elapsed_ms = 0;
  if (!parse_i64(line.substr(0, c1), elapsed_ms) || elapsed_ms < 0) return false;
  record.elapsed = Millis(elapsed_ms);
  if (!parse_real(line.substr(c1 + 1, c2 - c1 - 1), record.score)) return false;

  std::string_view errors_field =
      c3 == std::string_view::npos ? line.substr(c2 + 1)
                                   : line.substr(c2 + 1, c3 - c2 - 1);
  if (!parse_i64(errors_field, record.error_count) || record.error_count < 0)
    return false;

  record.metrics.clear();
  if (c3 == std::string_view::npos) return true;
  std::string_view blob = line.substr(c3 + 1);
  if (blob.empty()) return true;
  for (std::string_view entry : split(blob, ';')) {
    std::size_t eq = entry.find('=');
    if (eq == std::string_view::npos || eq == 0) return false;
    double value = 0.0;
    if (!parse_real(entry.substr(eq + 1), value)) return false;
    record.metrics.emplace_back(std::string(entry.substr(0, eq)), value);
  }
  return true;
}

}  // namespace

std::string to_string(Direction d) {
  return d == Direction::LowerIsBetter ? "min" : "max";
}

Direction direction_from_string(const std::string& s) {
  if (s == "min") return Direction::LowerIsBetter;
  if (s == "max") return Direction::HigherIsBetter;
  throw ConfigError("unknown metric direction: " + s);
}

bool MetricSchema::contains(const std::string& name) const {
  return direction_of(name).has_value();
}

std::optional<Direction> MetricSchema::direction_of(const std::string& name) const {
  for (const MetricSpec& spec : metrics)
    if (spec.name == name) return spec.direction;
  return std::nullopt;
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string format_checkpoint_header(const CheckpointHeader& header) {
  std::string schema;
  for (const MetricSpec& spec : header.schema.metrics) {
    if (!schema.empty()) schema += ';';
    schema += spec.name + ':' + to_string(spec.direction);
  }
  return "# subject=" + header.subject + " seed=" + std::to_string(header.seed) +
         " schema=" + schema;
}

std::string format_checkpoint_record(const CheckpointRecord& record) {
  std::string line = std::to_string(record.elapsed.count()) + ',' +
                     format_real(record.score) + ',' +
                     std::to_string(record.error_count) + ',';
  bool first = true;
  for (const auto& [name, value] : record.metrics) {
    if (!first) line += ';';
    line += name + '=' + format_real(value);
    first = false;
  }
  return line;
}

CheckpointWriter::CheckpointWriter(const std::filesystem::path& path,
                                   const CheckpointHeader& header)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open checkpoint file " + path.string());
  out_ << format_checkpoint_header(header) << '\n';
  out_.flush();
}

void CheckpointWriter::append(const CheckpointRecord& record) {
  out_ << format_checkpoint_record(record) << '\n';
  out_.flush();
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  CheckpointFile file;
  std::ifstream in(path);
  if (!in) return file;

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& text = lines[i];
    bool ok = false;
    if (!text.empty() && text[0] == '#') {
      CheckpointHeader header;
      ok = parse_header_line(text, header);
      if (ok && !file.header) file.header = std::move(header);
    } else {
      CheckpointRecord record;
      ok = parse_record_line(text, record);
      if (ok) file.records.push_back(std::move(record));
    }
    if (!ok) {
      if (i + 1 == lines.size()) {
        file.dropped_trailing = true;  // torn final write from a killed instance
      } else {
        file.corrupt = true;
      }
      break;
    }
  }
  return file;
}

}  // namespace betrun
