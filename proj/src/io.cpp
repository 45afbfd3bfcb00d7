#include "gapfill/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gapfill::io {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> data_lines(const std::filesystem::path& path, const std::string& header) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> out;
  bool seen_header = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) {
        throw IoError(path.string() + ": expected header '" + header + "', got '" + line + "'");
      }
      seen_header = true;
      continue;
    }
    out.push_back(line);
  }
  if (!seen_header) throw IoError(path.string() + ": missing header '" + header + "'");
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::filesystem::path& path, std::size_t row) {
  T value{};
  const std::string s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw IoError(path.string() + ": row " + std::to_string(row) + ": cannot parse '" + s + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

OrderedConfig read_events(const std::filesystem::path& path) {
  std::vector<double> times;
  std::size_t row = 0;
  for (const auto& line : data_lines(path, "time")) {
    times.push_back(parse_number<double>(line, path, ++row));
  }
  try {
    return OrderedConfig(std::move(times));
  } catch (const DomainError& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

std::string format_events(std::span<const double> times) {
  std::string text = "time\n";
  for (double t : times) text += format_double(t) + "\n";
  return text;
}

void write_events(const std::filesystem::path& path, std::span<const double> times) {
  write_text(path, format_events(times));
}

lgcp::DailyCounts read_counts(const std::filesystem::path& path) {
  lgcp::DailyCounts out;
  std::size_t row = 0;
  for (const auto& line : data_lines(path, "day,count,observed")) {
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw IoError(path.string() + ": row " + std::to_string(row) + ": expected 3 fields");
    }
    const auto day = parse_number<std::int64_t>(fields[0], path, row);
    const auto count = parse_number<std::int64_t>(fields[1], path, row);
    const auto flag = parse_number<int>(fields[2], path, row);
    if (flag != 0 && flag != 1) {
      throw IoError(path.string() + ": row " + std::to_string(row) + ": observed must be 0 or 1");
    }
    if (out.counts.empty()) {
      out.first_day = day;
    } else if (day != out.day(out.size())) {
      throw IoError(path.string() + ": row " + std::to_string(row) + ": days must be consecutive");
    }
    out.counts.push_back(flag == 1 ? count : 0);
    out.observed.push_back(flag == 1);
  }
  if (out.counts.empty()) throw IoError(path.string() + ": no rows");
  out.validate();
  return out;
}

std::string format_counts(const lgcp::DailyCounts& counts) {
  std::string text = "day,count,observed\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    text += std::to_string(counts.day(i)) + "," + std::to_string(counts.counts[i]) + "," +
            (counts.observed[i] ? "1" : "0") + "\n";
  }
  return text;
}

void write_counts(const std::filesystem::path& path, const lgcp::DailyCounts& counts) {
  write_text(path, format_counts(counts));
}

}  // namespace gapfill::io
