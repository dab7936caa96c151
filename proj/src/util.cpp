#include "hforge/util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hforge/errors.hpp"

namespace hforge {

std::string hex_hash(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FilesystemError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {
void write_impl(const std::filesystem::path& path, std::string_view content,
                std::ios::openmode mode) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw FilesystemError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | mode);
  if (!out) throw FilesystemError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw FilesystemError("write failed for " + path.string());
}
}  // namespace

void write_file(const std::filesystem::path& path, std::string_view content) {
  write_impl(path, content, std::ios::trunc);
}

void append_file(const std::filesystem::path& path, std::string_view content) {
  write_impl(path, content, std::ios::app);
}

std::string format_fixed(double value, int digits) {
  double scale = std::pow(10.0, digits);
  double rounded = std::round(value * scale) / scale;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, rounded);
  return buf;
}

}  // namespace hforge
