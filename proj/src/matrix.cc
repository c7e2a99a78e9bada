// src/matrix.cc
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

#include "matrix.h"

#include <cstring>
#include <fstream>
#include <iomanip>

namespace audkit {

namespace {

constexpr char kMagic[4] = {'A', 'K', 'F', 'B'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream &os, const T &v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream &is, T *v, const std::string &path) {
  is.read(reinterpret_cast<char *>(v), sizeof(T));
  if (!is) throw_error(Status::kCorruptFile, "truncated matrix file: ", path);
}

}  // namespace

FeatureMatrix FeatureMatrix::slice_rows(int64_t begin, int64_t end) const {
  require(begin >= 0 && begin <= end && end <= rows, Status::kOutOfRange,
          "row slice [", begin, ", ", end, ") out of range for ", rows, " rows");
  FeatureMatrix out(end - begin, cols);
  out.frame_shift = frame_shift;
  out.frame_len = frame_len;
  std::memcpy(out.data.data(), data.data() + begin * cols,
              static_cast<size_t>((end - begin) * cols) * sizeof(double));
  return out;
}

void save_matrix(const FeatureMatrix &m, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), Status::kIoError, "cannot open for writing: ", path);
  os.write(kMagic, 4);
  write_pod(os, kFormatVersion);
  write_pod(os, m.rows);
  write_pod(os, m.cols);
  write_pod(os, m.frame_shift);
  write_pod(os, m.frame_len);
  os.write(reinterpret_cast<const char *>(m.data.data()),
           static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  require(os.good(), Status::kIoError, "write failed: ", path);
}

FeatureMatrix load_matrix(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), Status::kNotFound, "no such file: ", path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, kMagic, 4) == 0, Status::kUnsupportedFormat,
          "not a feature matrix file: ", path);
  uint32_t version = 0;
  read_pod(is, &version, path);
  require(version == kFormatVersion, Status::kUnsupportedFormat,
          "unsupported matrix format version ", version, " in ", path);
  FeatureMatrix m;
  read_pod(is, &m.rows, path);
  read_pod(is, &m.cols, path);
  read_pod(is, &m.frame_shift, path);
  read_pod(is, &m.frame_len, path);
  require(m.rows >= 0 && m.cols >= 0, Status::kCorruptFile, "bad matrix shape in ", path);
  m.data.resize(static_cast<size_t>(m.rows * m.cols));
  is.read(reinterpret_cast<char *>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  require(is.gcount() == static_cast<std::streamsize>(m.data.size() * sizeof(double)),
          Status::kCorruptFile, "truncated matrix payload: ", path);
  return m;
}

void save_matrix_csv(const FeatureMatrix &m, const std::string &path) {
  std::ofstream os(path);
  require(os.good(), Status::kIoError, "cannot open for writing: ", path);
  os << std::setprecision(17);
  for (int64_t r = 0; r < m.rows; ++r) {
    const double *row = m.row(r);
    for (int64_t c = 0; c < m.cols; ++c) {
      if (c) os << ',';
      os << row[c];
    }
    os << '\n';
  }
  require(os.good(), Status::kIoError, "write failed: ", path);
}

}  // namespace audkit
