// src/wave.cc
//
// Copyright 2026  The audkit authors
//
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

#include "wave.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace audkit {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatIeeeFloat = 3;

uint32_t read_u32le(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t read_u16le(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void write_u32le(std::ostream &os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char *>(b), 4);
}

void write_u16le(std::ostream &os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char *>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) throw_error(Status::kNotFound, "no such file: ", path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw_error(Status::kCorruptFile, "file too small for RIFF header: ", path);
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw_error(Status::kUnsupportedFormat, "not a RIFF/WAVE file: ", path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  const unsigned char *data_ptr = nullptr;
  uint32_t data_size = 0;

  // Walk the chunk list; chunk payloads are padded to even sizes.
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *hdr = bytes.data() + pos;
    uint32_t chunk_size = read_u32le(hdr + 4);
    size_t payload = pos + 8;
    if (payload + chunk_size > bytes.size())
      throw_error(Status::kCorruptFile, "chunk extends past end of file: ", path);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw_error(Status::kCorruptFile, "fmt chunk too small: ", path);
      const unsigned char *f = bytes.data() + payload;
      format = read_u16le(f);
      channels = read_u16le(f + 2);
      sample_rate = read_u32le(f + 4);
      bits = read_u16le(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = bytes.data() + payload;
      data_size = chunk_size;
    }
    pos = payload + chunk_size + (chunk_size & 1);
  }

  if (!have_fmt || data_ptr == nullptr)
    throw_error(Status::kCorruptFile, "missing fmt or data chunk: ", path);
  if (channels != 1)
    throw_error(Status::kUnsupportedFormat, channels, "-channel audio (mono only): ", path);
  if (sample_rate == 0) throw_error(Status::kCorruptFile, "zero sample rate: ", path);

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  if (format == kFormatPcm && bits == 16) {
    size_t n = data_size / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t s = static_cast<int16_t>(read_u16le(data_ptr + 2 * i));
      w.samples[i] = static_cast<float>(s) / 32768.0f;
    }
  } else if (format == kFormatIeeeFloat && bits == 32) {
    size_t n = data_size / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = read_u32le(data_ptr + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      if (!std::isfinite(f)) throw_error(Status::kCorruptFile, "non-finite sample in ", path);
      w.samples[i] = std::clamp(f, -1.0f, 1.0f);
    }
  } else {
    throw_error(Status::kUnsupportedFormat, "codec tag ", format, " at ", bits,
                " bits (want 16-bit PCM or 32-bit float): ", path);
  }
  return w;
}

void write_wav(const Waveform &w, const std::string &path) {
  require(w.sample_rate > 0, Status::kInvalidArgument, "waveform has no sample rate");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), Status::kIoError, "cannot open for writing: ", path);

  uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  write_u32le(os, 36 + data_size);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32le(os, 16);
  write_u16le(os, kFormatPcm);
  write_u16le(os, 1);  // mono
  write_u32le(os, static_cast<uint32_t>(w.sample_rate));
  write_u32le(os, static_cast<uint32_t>(w.sample_rate) * 2);  // byte rate
  write_u16le(os, 2);                                         // block align
  write_u16le(os, 16);                                        // bits
  os.write("data", 4);
  write_u32le(os, data_size);
  for (float x : w.samples) {
    long v = std::lround(static_cast<double>(x) * 32768.0);
    v = std::clamp(v, -32768l, 32767l);
    write_u16le(os, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  require(os.good(), Status::kIoError, "write failed: ", path);
}

}  // namespace audkit
