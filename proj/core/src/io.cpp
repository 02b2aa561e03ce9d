// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>

namespace beamgen {

namespace {

void encode_u32(std::uint32_t v, char out[4]) {
  out[0] = static_cast<char>(v & 0xff);
  out[1] = static_cast<char>((v >> 8) & 0xff);
  out[2] = static_cast<char>((v >> 16) & 0xff);
  out[3] = static_cast<char>((v >> 24) & 0xff);
}

void encode_u64(std::uint64_t v, char out[8]) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t decode_u32(const char in[4]) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(in[i]);
  return v;
}

std::uint64_t decode_u64(const char in[8]) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(in[i]);
  return v;
}

} // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw FormatError("cannot open for writing: " + path.string());
}

void BinaryWriter::magic(const char tag[4]) { out_.write(tag, 4); }

void BinaryWriter::u32(std::uint32_t v) {
  char buf[4];
  encode_u32(v, buf);
  out_.write(buf, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
  char buf[8];
  encode_u64(v, buf);
  out_.write(buf, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::f64_array(const double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(data),
               static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < count; ++i) f64(data[i]);
  }
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw FormatError("cannot open for reading: " + path.string());
}

void BinaryReader::fill(char* dst, std::size_t count) {
  in_.read(dst, static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in_.gcount()) != count)
    throw FormatError("truncated file: " + path_.string());
}

void BinaryReader::expect_magic(const char tag[4]) {
  char buf[4];
  fill(buf, 4);
  if (std::memcmp(buf, tag, 4) != 0)
    throw FormatError("bad magic in " + path_.string());
}

std::uint32_t BinaryReader::u32() {
  char buf[4];
  fill(buf, 4);
  return decode_u32(buf);
}

std::uint64_t BinaryReader::u64() {
  char buf[8];
  fill(buf, 8);
  return decode_u64(buf);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::f64_array(double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    fill(reinterpret_cast<char*>(data), count * sizeof(double));
  } else {
    for (std::size_t i = 0; i < count; ++i) data[i] = f64();
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path)
    : out_(path, std::ios::trunc) {
  if (!out_) throw FormatError("cannot open for writing: " + path.string());
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns[i];
  }
  out_ << "\n";
}

void CsvWriter::begin_row() { first_in_row_ = true; }

void CsvWriter::field(const std::string& value) {
  if (!first_in_row_) out_ << ",";
  out_ << value;
  first_in_row_ = false;
}

void CsvWriter::field(double value) { field(format_double(value)); }

void CsvWriter::field(long long value) { field(std::to_string(value)); }

void CsvWriter::end_row() { out_ << "\n"; }

} // namespace beamgen
