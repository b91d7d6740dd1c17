// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

/// Small helpers for the flat key=value text formats.
namespace histcolor::text {

std::string trim(const std::string& s);
/// Drops everything from the first '#' and trims.
std::string strip_comment(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

/// Parsers throw kConfig with `where` in the message.
int parse_int(const std::string& s, const std::string& where);
double parse_double(const std::string& s, const std::string& where);
bool parse_bool(const std::string& s, const std::string& where);
std::vector<double> parse_doubles(const std::string& s, const std::string& where);

/// Reads `key = value` lines into an ordered map. Duplicate keys and lines
/// without '=' throw kConfig.
std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& content,
                                                                  const std::string& origin);

}  // namespace histcolor::text
