// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "histcolor/error.hpp"

namespace histcolor::text {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& s) { return trim(s.substr(0, s.find('#'))); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

int parse_int(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(), ErrorCode::kConfig,
          where + ": expected an integer, got '" + t + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == t.size() && !t.empty(), ErrorCode::kConfig,
          where + ": expected a number, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& where) {
  std::string t = trim(s);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  fail(ErrorCode::kConfig, where + ": expected a boolean, got '" + t + "'");
}

std::vector<double> parse_doubles(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part, where));
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& content,
                                                                  const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = strip_comment(line);
    if (t.empty()) continue;
    const auto where = origin + ":" + std::to_string(line_no);
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorCode::kConfig, where + ": expected key = value");
    auto key = trim(t.substr(0, eq));
    require(!key.empty(), ErrorCode::kConfig, where + ": empty key");
    require(seen.insert(key).second, ErrorCode::kConfig, where + ": duplicate key '" + key + "'");
    out.emplace_back(std::move(key), trim(t.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

}  // namespace histcolor::text
