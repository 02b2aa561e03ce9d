// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamgen {

/// Thrown on bad magic, bad version, truncation, or dimension-chain mismatch.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Little-endian binary writer for the container formats.
class BinaryWriter {
public:
  explicit BinaryWriter(const std::filesystem::path& path);
  void magic(const char tag[4]);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64_array(const double* data, std::size_t count);

private:
  std::ofstream out_;
};

class BinaryReader {
public:
  explicit BinaryReader(const std::filesystem::path& path);
  void expect_magic(const char tag[4]);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64_array(double* data, std::size_t count);

private:
  void fill(char* dst, std::size_t count);
  std::ifstream in_;
  std::filesystem::path path_;
};

/// CSV writer: optional '#' comment line first, then a header row. Doubles are
/// printed with %.17g so emitted files are byte-stable and round-trip exactly.
class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path& path);
  void comment(const std::string& text);
  void header(const std::vector<std::string>& columns);
  void begin_row();
  void field(const std::string& value);
  void field(double value);
  void field(long long value);
  void end_row();

private:
  std::ofstream out_;
  bool first_in_row_ = true;
};

std::string format_double(double v); // %.17g

} // namespace beamgen
