// core/include/arraydiar/io.hpp

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

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace arraydiar {

/// One "key value..." line from a plain-text config-style file.
struct KeyValueLine {
  std::string key;
  std::string value;  // everything after the key, trimmed
  int line_no = 0;
};

/// Line-oriented key/value reader shared by the config, geometry, scene, and
/// profile file formats. Lines are "key value...", '#' starts a comment,
/// blank lines are skipped. Keys may repeat (e.g. geometry "mic" lines).
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::filesystem::path& path);
  static KeyValueFile parse_string(const std::string& text,
                                   const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  /// First value for key; raises kMalformedFile when absent.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;

  /// All lines with the given key, in file order.
  std::vector<KeyValueLine> all(const std::string& key) const;

  /// Raises kMalformedFile naming the first key not in `allowed`, with its
  /// line number.
  void check_known(const std::vector<std::string>& allowed) const;

  const std::vector<KeyValueLine>& lines() const { return lines_; }
  const std::string& origin() const { return origin_; }

  double parse_double(const KeyValueLine& line) const;

 private:
  std::vector<KeyValueLine> lines_;
  std::string origin_;
};

/// Splits a comma-separated list of numbers ("30,210" or "30, 210").
std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what);

/// Writes through a temporary file and renames into place on commit, so
/// readers never observe a partially written output.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(const std::filesystem::path& path,
                            bool binary = false);
  ~AtomicFileWriter();

  std::ofstream& stream() { return stream_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_path_;
  std::ofstream stream_;
  bool committed_ = false;
};

void write_raw_doubles(std::ostream& out, const double* values, std::size_t count);
void read_raw_doubles(std::istream& in, double* values, std::size_t count,
                      const std::string& what);

}  // namespace arraydiar
