#include "glmm/io.hpp"

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace glmm::io {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "GLMM-CUBE 1";

std::runtime_error ioError(const fs::path& path, const std::string& what) {
  return std::runtime_error(path.string() + ": " + what);
}

std::uint32_t toLittleEndian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  return v;
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> readLines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ioError(path, "cannot open for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string formatNumber(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parseNumber(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

HsiCube<double> loadCube(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ioError(path, "cannot open cube file");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw ioError(path, "missing cube header");
  std::map<std::string, std::string> fields;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (line == "end_header") {
      terminated = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ioError(path, "malformed header line '" + line + "'");
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!terminated) throw ioError(path, "header is not terminated by end_header");
  for (const char* key : {"rows", "cols", "bands", "dtype", "interleave"})
    if (!fields.count(key)) throw ioError(path, std::string("header lacks '") + key + "'");
  if (fields["dtype"] != "f32le") throw ioError(path, "unsupported dtype " + fields["dtype"]);
  if (fields["interleave"] != "bsq")
    throw ioError(path, "unsupported interleave " + fields["interleave"]);

  const long long p = std::stoll(fields["rows"]), q = std::stoll(fields["cols"]),
                  nb = std::stoll(fields["bands"]);
  if (p <= 0 || q <= 0 || nb <= 0) throw ioError(path, "dimensions must be positive");
  const std::size_t expected = static_cast<std::size_t>(p * q * nb);

  const std::streampos start = in.tellg();
  in.seekg(0, std::ios::end);
  const std::size_t bytes = static_cast<std::size_t>(in.tellg() - start);
  in.seekg(start);
  if (bytes != expected * sizeof(float)) {
    throw ioError(path, "payload holds " + std::to_string(bytes / sizeof(float)) + " values (" +
                            std::to_string(bytes) + " bytes), header needs " +
                            std::to_string(expected));
  }
  std::vector<std::uint32_t> raw(expected);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw ioError(path, "short read");

  const Index np = p * q;
  Matrix<double> data(nb, np);
  for (std::size_t i = 0; i < expected; ++i) {
    const std::uint32_t bits = toLittleEndian(raw[i]);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    const Index band = static_cast<Index>(i) / np, pixel = static_cast<Index>(i) % np;
    if (!std::isfinite(f)) {
      throw ioError(path, "non-finite value at payload index " + std::to_string(i) + " (band " +
                              std::to_string(band) + ", row " + std::to_string(pixel / q) +
                              ", col " + std::to_string(pixel % q) + ")");
    }
    data(band, pixel) = f;
  }
  return HsiCube<double>(GridShape{p, q}, std::move(data));
}

void saveCube(const HsiCube<double>& cube, const fs::path& path) {
  const Index np = cube.pixels(), nb = cube.bands();
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(np * nb));
  for (Index band = 0; band < nb; ++band) {
    for (Index n = 0; n < np; ++n) {
      const float f = static_cast<float>(cube.data()(band, n));
      if (!std::isfinite(f))
        throw ioError(path, "refusing to write non-finite value at band " + std::to_string(band) +
                                ", pixel " + std::to_string(n));
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof f);
      raw[static_cast<std::size_t>(band * np + n)] = toLittleEndian(bits);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ioError(path, "cannot open for writing");
  out << kMagic << "\n"
      << "rows=" << cube.rows() << "\n"
      << "cols=" << cube.cols() << "\n"
      << "bands=" << cube.bands() << "\n"
      << "dtype=f32le\n"
      << "interleave=bsq\n"
      << "end_header\n";
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  if (!out) throw ioError(path, "write failed");
}

Matrix<double> loadMatrixCsv(const fs::path& path) {
  const std::vector<std::string> lines = readLines(path);
  if (lines.empty()) throw ioError(path, "empty matrix file");
  std::vector<std::vector<double>> rows;
  for (const std::string& line : lines) {
    std::vector<double> row;
    for (const std::string& cell : splitCsvLine(line)) row.push_back(parseNumber(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ioError(path, "ragged matrix row " + std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }
  Matrix<double> m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void saveMatrixCsv(const Matrix<double>& m, const fs::path& path) {
  std::ostringstream os;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << formatNumber(m(i, j));
    os << "\n";
  }
  writeText(path, os.str());
}

FlatTensor loadTensorCsv(const fs::path& path) {
  const std::vector<std::string> lines = readLines(path);
  if (lines.empty() || lines.front() != "l,k,n,value")
    throw ioError(path, "tensor file must start with 'l,k,n,value'");
  struct Entry {
    long long l, k, n;
    double v;
  };
  std::vector<Entry> entries;
  long long nb = 0, nr = 0, np = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = splitCsvLine(lines[i]);
    if (cells.size() != 4) throw ioError(path, "line " + std::to_string(i + 1) + " needs 4 fields");
    Entry e{std::stoll(cells[0]), std::stoll(cells[1]), std::stoll(cells[2]), parseNumber(cells[3])};
    if (e.l < 0 || e.k < 0 || e.n < 0) throw ioError(path, "negative index");
    nb = std::max(nb, e.l + 1);
    nr = std::max(nr, e.k + 1);
    np = std::max(np, e.n + 1);
    entries.push_back(e);
  }
  if (static_cast<long long>(entries.size()) != nb * nr * np)
    throw ioError(path, "tensor has " + std::to_string(entries.size()) + " entries, expected " +
                            std::to_string(nb * nr * np));
  FlatTensor t{nb, nr, Matrix<double>::Constant(nb * nr, np, std::nan(""))};
  for (const Entry& e : entries) t.flat(e.l + nb * e.k, e.n) = e.v;
  if (detail::firstNonFinite(t.flat) >= 0) throw ioError(path, "missing or duplicate entries");
  return t;
}

void saveTensorCsv(Index bands, Index count, const Matrix<double>& flat, const fs::path& path) {
  std::ostringstream os;
  os << "l,k,n,value\n";
  for (Index n = 0; n < flat.cols(); ++n)
    for (Index k = 0; k < count; ++k)
      for (Index l = 0; l < bands; ++l)
        os << l << "," << k << "," << n << "," << formatNumber(flat(l + bands * k, n)) << "\n";
  writeText(path, os.str());
}

std::string readText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ioError(path, "cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void writeText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ioError(path, "cannot open for writing");
  out << text;
  if (!out) throw ioError(path, "write failed");
}

void saveScene(const SyntheticScene<double>& scene, const fs::path& dir) {
  fs::create_directories(dir);
  saveCube(scene.cube, dir / "cube.hsi");
  saveCube(scene.cubeClean, dir / "cube_clean.hsi");
  saveMatrixCsv(scene.truthA.data(), dir / "truth_A.csv");
  saveTensorCsv(scene.truthPsi, dir / "truth_Psi.csv");
  saveMatrixCsv(scene.m0.data(), dir / "M0.csv");
  nlohmann::ordered_json meta;
  meta["protocol"] = protocolName(scene.protocol);
  meta["seed"] = scene.seed;
  if (std::isfinite(scene.snrDb))
    meta["snr_db"] = scene.snrDb;
  else
    meta["snr_db"] = "inf";
  meta["rows"] = scene.cube.rows();
  meta["cols"] = scene.cube.cols();
  meta["bands"] = scene.cube.bands();
  meta["endmembers"] = scene.m0.count();
  writeText(dir / "meta.json", meta.dump(2) + "\n");
}

SyntheticScene<double> loadScene(const fs::path& dir) {
  const auto meta = nlohmann::json::parse(readText(dir / "meta.json"));
  SyntheticScene<double> s;
  s.protocol = parseProtocol(meta.at("protocol").get<std::string>());
  s.seed = meta.at("seed").get<std::uint64_t>();
  s.snrDb = meta.at("snr_db").is_string() ? std::numeric_limits<double>::infinity()
                                          : meta.at("snr_db").get<double>();
  s.cube = loadCube(dir / "cube.hsi");
  s.cubeClean = loadCube(dir / "cube_clean.hsi");
  s.m0 = EndmemberMatrix<double>(loadMatrixCsv(dir / "M0.csv"));
  s.truthA = AbundanceMatrix<double>(loadMatrixCsv(dir / "truth_A.csv"));
  s.truthPsi = loadTensor<ScalingTag>(dir / "truth_Psi.csv");
  s.truthM = scaleEndmembers(s.m0, s.truthPsi);
  if (s.cube.rows() != meta.at("rows").get<Index>() || s.cube.cols() != meta.at("cols").get<Index>())
    throw ioError(dir, "cube dimensions disagree with meta.json");
  return s;
}

}  // namespace glmm::io
