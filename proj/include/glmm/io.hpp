#pragma once

// File formats.
//
// Cube file: a text header followed immediately by a raw float32
// little-endian band-sequential payload of rows*cols*bands values:
//
//   GLMM-CUBE 1
//   rows=<p>
//   cols=<q>
//   bands=<L>
//   dtype=f32le
//   interleave=bsq
//   end_header
//   <payload>
//
// Band-sequential order is band-major, then row, then column, so within one
// band the values follow the row-major pixel index.
//
// Matrix CSV: one line per matrix row, comma separated, no header.
// Tensor CSV: header "l,k,n,value" then one line per entry.

#include "glmm/core.hpp"
#include "glmm/synthetic.hpp"

#include <filesystem>
#include <string>

namespace glmm::io {

HsiCube<double> loadCube(const std::filesystem::path& path);
void saveCube(const HsiCube<double>& cube, const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string formatNumber(double v);
double parseNumber(const std::string& s);

Matrix<double> loadMatrixCsv(const std::filesystem::path& path);
void saveMatrixCsv(const Matrix<double>& m, const std::filesystem::path& path);

struct FlatTensor {
  Index bands = 0;
  Index count = 0;
  Matrix<double> flat;  // (bands*count) x pixels, see BandEndmemberTensor
};

FlatTensor loadTensorCsv(const std::filesystem::path& path);
void saveTensorCsv(Index bands, Index count, const Matrix<double>& flat,
                   const std::filesystem::path& path);

template <typename Tag>
void saveTensorCsv(const BandEndmemberTensor<double, Tag>& t, const std::filesystem::path& path) {
  saveTensorCsv(t.bands(), t.count(), t.flat(), path);
}

template <typename Tag>
BandEndmemberTensor<double, Tag> loadTensor(const std::filesystem::path& path) {
  FlatTensor t = loadTensorCsv(path);
  return BandEndmemberTensor<double, Tag>(t.bands, t.count, std::move(t.flat));
}

std::string readText(const std::filesystem::path& path);
void writeText(const std::filesystem::path& path, const std::string& text);

/// Scene directory: cube.hsi, cube_clean.hsi, truth_A.csv, truth_Psi.csv,
/// M0.csv and meta.json.
void saveScene(const SyntheticScene<double>& scene, const std::filesystem::path& dir);
SyntheticScene<double> loadScene(const std::filesystem::path& dir);

}  // namespace glmm::io
