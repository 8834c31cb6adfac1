// core/src/io.cpp

// Copyright 2026  ArrayDiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "arraydiar/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "arraydiar/error.hpp"

namespace arraydiar {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

KeyValueFile KeyValueFile::parse_string(const std::string& text,
                                        const std::string& origin) {
  KeyValueFile file;
  file.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto split = raw.find_first_of(" \t=");
    KeyValueLine line;
    line.line_no = line_no;
    if (split == std::string::npos) {
      line.key = raw;
    } else {
      line.key = raw.substr(0, split);
      line.value = trim(raw.substr(split + 1));
    }
    file.lines_.push_back(std::move(line));
  }
  return file;
}

bool KeyValueFile::has(const std::string& key) const {
  return std::any_of(lines_.begin(), lines_.end(),
                     [&](const KeyValueLine& l) { return l.key == key; });
}

const std::string& KeyValueFile::get(const std::string& key) const {
  for (const auto& line : lines_) {
    if (line.key == key) return line.value;
  }
  raise(ErrorCode::kMalformedFile, origin_ + ": missing required key '" + key + "'");
}

std::string KeyValueFile::get_or(const std::string& key,
                                 const std::string& fallback) const {
  for (const auto& line : lines_) {
    if (line.key == key) return line.value;
  }
  return fallback;
}

double KeyValueFile::parse_double(const KeyValueLine& line) const {
  const char* begin = line.value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || trim(end).size() != 0) {
    raise(ErrorCode::kMalformedFile,
          origin_ + ":" + std::to_string(line.line_no) + ": expected a number for '" +
              line.key + "', got '" + line.value + "'");
  }
  return v;
}

double KeyValueFile::get_double(const std::string& key) const {
  for (const auto& line : lines_) {
    if (line.key == key) return parse_double(line);
  }
  raise(ErrorCode::kMalformedFile, origin_ + ": missing required key '" + key + "'");
}

double KeyValueFile::get_double_or(const std::string& key, double fallback) const {
  for (const auto& line : lines_) {
    if (line.key == key) return parse_double(line);
  }
  return fallback;
}

int KeyValueFile::get_int(const std::string& key) const {
  const double v = get_double(key);
  return static_cast<int>(v);
}

int KeyValueFile::get_int_or(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  return get_int(key);
}

std::uint64_t KeyValueFile::get_u64_or(const std::string& key,
                                       std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  return static_cast<std::uint64_t>(get_double(key));
}

std::vector<KeyValueLine> KeyValueFile::all(const std::string& key) const {
  std::vector<KeyValueLine> out;
  for (const auto& line : lines_) {
    if (line.key == key) out.push_back(line);
  }
  return out;
}

void KeyValueFile::check_known(const std::vector<std::string>& allowed) const {
  for (const auto& line : lines_) {
    if (std::find(allowed.begin(), allowed.end(), line.key) == allowed.end()) {
      raise(ErrorCode::kMalformedFile,
            origin_ + ":" + std::to_string(line.line_no) + ": unknown key '" +
                line.key + "'");
    }
  }
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || trim(end).size() != 0) {
      raise(ErrorCode::kMalformedFile, what + ": expected a number, got '" + token + "'");
    }
    out.push_back(v);
  }
  return out;
}

AtomicFileWriter::AtomicFileWriter(const std::filesystem::path& path, bool binary)
    : path_(path), tmp_path_(path.string() + ".tmp") {
  std::ios_base::openmode mode = std::ios_base::out | std::ios_base::trunc;
  if (binary) mode |= std::ios_base::binary;
  stream_.open(tmp_path_, mode);
  if (!stream_) {
    raise(ErrorCode::kUnwritablePath, "cannot write: " + path.string());
  }
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    stream_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_path_, ec);
  }
}

void AtomicFileWriter::commit() {
  stream_.flush();
  if (!stream_) {
    raise(ErrorCode::kUnwritablePath, "write failed: " + path_.string());
  }
  stream_.close();
  std::error_code ec;
  std::filesystem::rename(tmp_path_, path_, ec);
  if (ec) {
    raise(ErrorCode::kUnwritablePath,
          "cannot move " + tmp_path_.string() + " to " + path_.string());
  }
  committed_ = true;
}

void write_raw_doubles(std::ostream& out, const double* values, std::size_t count) {
  out.write(reinterpret_cast<const char*>(values),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_raw_doubles(std::istream& in, double* values, std::size_t count,
                      const std::string& what) {
  in.read(reinterpret_cast<char*>(values),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) raise(ErrorCode::kMalformedFile, what + ": truncated payload");
}

}  // namespace arraydiar
