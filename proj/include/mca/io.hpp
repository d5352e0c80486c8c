#pragma once

// File-format plumbing: CSV and JSON ingestion for weights, features,
// mixtures, and density grids, plus deterministic emission. JSON parsing is
// delegated to nlohmann::json; emission is hand-rolled so that every float
// is printed with 17 significant digits and reruns are byte-identical.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mca/basis.hpp"
#include "mca/em.hpp"
#include "mca/errors.hpp"
#include "mca/eval.hpp"

namespace mca::io {

// ---------------------------------------------------------------------------
// formatting

// 17 significant digits round-trip any double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

inline std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if ((unsigned char)c < 0x20) {
          char hex[8];
          std::snprintf(hex, sizeof(hex), "\\u%04x", c);
          out += hex;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Minimal JSON composer with automatic comma placement. Output key order is
// the call order, so emission is deterministic.
class JsonWriter {
 public:
  void begin_object() { sep(); out_ += '{'; fresh_ = true; }
  void end_object() { out_ += '}'; fresh_ = false; }
  void begin_array() { sep(); out_ += '['; fresh_ = true; }
  void end_array() { out_ += ']'; fresh_ = false; }
  void key(std::string_view k) {
    sep();
    out_ += '"';
    out_ += json_escape(k);
    out_ += "\":";
    fresh_ = true;
  }
  void value(double v) {
    sep();
    if (std::isfinite(v)) out_ += format_double(v);
    else out_ += "null";
    fresh_ = false;
  }
  void value(std::int64_t v) { sep(); out_ += std::to_string(v); fresh_ = false; }
  void value(int v) { value((std::int64_t)v); }
  void value(std::uint64_t v) { sep(); out_ += std::to_string(v); fresh_ = false; }
  void value(bool v) { sep(); out_ += v ? "true" : "false"; fresh_ = false; }
  void value(std::string_view v) {
    sep();
    out_ += '"';
    out_ += json_escape(v);
    out_ += '"';
    fresh_ = false;
  }
  const std::string& str() const { return out_; }

 private:
  void sep() {
    if (!fresh_ && !out_.empty()) {
      const char c = out_.back();
      if (c != '{' && c != '[' && c != ':') out_ += ',';
    }
    fresh_ = false;
  }
  std::string out_;
  bool fresh_ = true;
};

// ---------------------------------------------------------------------------
// hashing (provenance)

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)fnv1a64(bytes));
  return buf;
}

// ---------------------------------------------------------------------------
// low-level helpers

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  out.write(contents.data(), (std::streamsize)contents.size());
  if (!out) throw parse_error("write to '" + path + "' failed");
}

namespace csv {

inline std::vector<std::string_view> split_fields(std::string_view line,
                                                  std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = comma == std::string_view::npos
                             ? line.substr(start)
                             : line.substr(start, comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_number(std::string_view f, double& v) {
  const char* first = f.data();
  const char* last = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last && !f.empty();
}

// Parses a CSV of numeric rows; an optional single header line is skipped.
// Every row must have the same number of fields.
inline std::vector<std::vector<double>> parse_rows(std::istream& in,
                                                   const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string_view> fields;
  std::string line;
  std::size_t lineno = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
    if (sv.empty()) continue;
    split_fields(sv, fields);
    std::vector<double> row(fields.size());
    bool ok = true;
    for (std::size_t i = 0; i < fields.size() && ok; ++i)
      ok = parse_number(fields[i], row[i]);
    if (!ok) {
      if (first_data) continue;  // header line
      throw parse_error(name + ":" + std::to_string(lineno) + ": expected numeric fields");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw parse_error(name + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(rows.front().size()) + " fields, got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
    first_data = false;
  }
  if (rows.empty()) throw parse_error(name + ": no data rows");
  return rows;
}

}  // namespace csv

inline nlohmann::json parse_json(std::istream& in, const std::string& name) {
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(name + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// weighted datasets

// CSV rows "u,v,w" (header optional).
inline WeightedDataset read_weights_csv(std::istream& in, const std::string& name) {
  const auto rows = csv::parse_rows(in, name);
  if (rows.front().size() != 3)
    throw parse_error(name + ": weight rows must be 'u,v,w'");
  std::vector<GridObservation> obs;
  obs.reserve(rows.size());
  for (const auto& r : rows) obs.push_back({Vec2{r[0], r[1]}, r[2]});
  try {
    return WeightedDataset(std::move(obs));
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
}

// JSON {"height": H, "width": W, "weights": [row-major H*W]} mapped to cell
// centers.
inline WeightedDataset read_weights_json(std::istream& in, const std::string& name) {
  const nlohmann::json j = parse_json(in, name);
  if (!j.is_object() || !j.contains("height") || !j.contains("width") ||
      !j.contains("weights"))
    throw parse_error(name + ": expected {\"height\", \"width\", \"weights\"}");
  if (!j["height"].is_number_integer() || !j["width"].is_number_integer() ||
      !j["weights"].is_array())
    throw parse_error(name + ": malformed weight grid");
  const std::int64_t h = j["height"].get<std::int64_t>();
  const std::int64_t w = j["width"].get<std::int64_t>();
  if (h < 1 || w < 1 || h * w > (std::int64_t)1 << 26)
    throw parse_error(name + ": unreasonable grid dimensions");
  const auto& arr = j["weights"];
  if ((std::int64_t)arr.size() != h * w)
    throw parse_error(name + ": weights length does not match height*width");
  std::vector<GridObservation> obs;
  obs.reserve(arr.size());
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t jj = 0; jj < w; ++jj) {
      const auto& cell = arr[(std::size_t)(i * w + jj)];
      if (!cell.is_number()) throw parse_error(name + ": non-numeric weight entry");
      obs.push_back({Vec2{((double)jj + 0.5) / (double)w, ((double)i + 0.5) / (double)h},
                     cell.get<double>()});
    }
  try {
    return WeightedDataset(std::move(obs));
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
}

inline WeightedDataset read_weights_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return read_weights_json(in, path);
  return read_weights_csv(in, path);
}

// ---------------------------------------------------------------------------
// feature grids

// CSV rows "u,v,f1,...,fD"; D is inferred from the first row.
inline FeatureGrid read_features_csv(std::istream& in, const std::string& name) {
  const auto rows = csv::parse_rows(in, name);
  if (rows.front().size() < 3)
    throw parse_error(name + ": feature rows must be 'u,v,f1,...'");
  const std::size_t d = rows.front().size() - 2;
  const std::size_t l = rows.size();
  FeatureGrid grid;
  grid.dim = d;
  grid.locations.reserve(l);
  grid.features.assign(d * l, 0.0);
  for (std::size_t col = 0; col < l; ++col) {
    grid.locations.push_back(Vec2{rows[col][0], rows[col][1]});
    for (std::size_t row = 0; row < d; ++row)
      grid.features[row * l + col] = rows[col][2 + row];
  }
  try {
    validate(grid);
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
  return grid;
}

// JSON descriptor {"height": H, "width": W, "dim": D, "data": path} with the
// payload either CSV (H*W rows of D values, row-major cells) or raw
// little-endian float64 (D values per cell, row-major cells). Cell centers
// are derived from H and W.
inline FeatureGrid read_features_json(std::istream& in, const std::string& name,
                                      const std::string& base_dir) {
  const nlohmann::json j = parse_json(in, name);
  if (!j.is_object() || !j.contains("height") || !j.contains("width") ||
      !j.contains("dim") || !j.contains("data"))
    throw parse_error(name + ": expected {\"height\", \"width\", \"dim\", \"data\"}");
  if (!j["height"].is_number_integer() || !j["width"].is_number_integer() ||
      !j["dim"].is_number_integer() || !j["data"].is_string())
    throw parse_error(name + ": malformed feature descriptor");
  const std::int64_t h = j["height"].get<std::int64_t>();
  const std::int64_t w = j["width"].get<std::int64_t>();
  const std::int64_t d = j["dim"].get<std::int64_t>();
  if (h < 1 || w < 1 || d < 1 || h * w * d > (std::int64_t)1 << 28)
    throw parse_error(name + ": unreasonable feature dimensions");
  std::string payload = j["data"].get<std::string>();
  if (!payload.empty() && payload.front() != '/' && !base_dir.empty())
    payload = base_dir + "/" + payload;

  const std::size_t l = (std::size_t)(h * w);
  FeatureGrid grid;
  grid.dim = (std::size_t)d;
  grid.locations.reserve(l);
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t jj = 0; jj < w; ++jj)
      grid.locations.push_back(
          Vec2{((double)jj + 0.5) / (double)w, ((double)i + 0.5) / (double)h});
  grid.features.assign(grid.dim * l, 0.0);

  const bool binary = payload.size() >= 4 && payload.substr(payload.size() - 4) == ".bin";
  if (binary) {
    const std::string bytes = read_file(payload);
    if (bytes.size() != l * grid.dim * sizeof(double))
      throw parse_error(name + ": payload size does not match H*W*D doubles");
    for (std::size_t cell = 0; cell < l; ++cell)
      for (std::size_t row = 0; row < grid.dim; ++row) {
        double v;
        std::memcpy(&v, bytes.data() + (cell * grid.dim + row) * sizeof(double),
                    sizeof(double));
        grid.features[row * l + cell] = v;
      }
  } else {
    std::ifstream data(payload, std::ios::binary);
    if (!data) throw parse_error("cannot open '" + payload + "'");
    const auto rows = csv::parse_rows(data, payload);
    if (rows.size() != l || rows.front().size() != grid.dim)
      throw parse_error(name + ": payload shape does not match descriptor");
    for (std::size_t cell = 0; cell < l; ++cell)
      for (std::size_t row = 0; row < grid.dim; ++row)
        grid.features[row * l + cell] = rows[cell][row];
  }
  try {
    validate(grid);
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
  return grid;
}

inline FeatureGrid read_features_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    const std::size_t slash = path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return read_features_json(in, path, dir);
  }
  return read_features_csv(in, path);
}

// ---------------------------------------------------------------------------
// mixtures

// {"components": [{"pi": p, "mean": [u, v], "cov": [[a, b], [b, c]]}, ...]}
inline MixtureParams read_mixture_json(std::istream& in, const std::string& name) {
  const nlohmann::json j = parse_json(in, name);
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array())
    throw parse_error(name + ": expected {\"components\": [...]}");
  MixtureParams m;
  for (const auto& c : j["components"]) {
    if (!c.is_object() || !c.contains("pi") || !c.contains("mean") || !c.contains("cov"))
      throw parse_error(name + ": component needs pi, mean, cov");
    if (!c["pi"].is_number() || !c["mean"].is_array() || c["mean"].size() != 2 ||
        !c["cov"].is_array() || c["cov"].size() != 2 || !c["mean"][0].is_number() ||
        !c["mean"][1].is_number())
      throw parse_error(name + ": malformed component");
    const auto& cov = c["cov"];
    if (!cov[0].is_array() || cov[0].size() != 2 || !cov[1].is_array() ||
        cov[1].size() != 2)
      throw parse_error(name + ": cov must be a 2x2 matrix");
    for (int r = 0; r < 2; ++r)
      for (int cc = 0; cc < 2; ++cc)
        if (!cov[r][cc].is_number()) throw parse_error(name + ": cov must be numeric");
    const double a = cov[0][0].get<double>();
    const double b01 = cov[0][1].get<double>();
    const double b10 = cov[1][0].get<double>();
    const double cv = cov[1][1].get<double>();
    if (b01 != b10) throw parse_error(name + ": cov must be symmetric");
    try {
      m.components.push_back({c["pi"].get<double>(),
                              Vec2{c["mean"][0].get<double>(), c["mean"][1].get<double>()},
                              Spd2(a, b01, cv)});
    } catch (const std::invalid_argument& e) {
      throw parse_error(name + ": " + e.what());
    }
  }
  try {
    validate(m);
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
  return m;
}

inline MixtureParams read_mixture_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return read_mixture_json(in, path);
}

inline void write_mixture(JsonWriter& w, const MixtureParams& m) {
  w.begin_object();
  w.key("components");
  w.begin_array();
  for (const MixtureComponent& c : m.components) {
    w.begin_object();
    w.key("pi");
    w.value(c.pi);
    w.key("mean");
    w.begin_array();
    w.value(c.mean.u);
    w.value(c.mean.v);
    w.end_array();
    w.key("cov");
    w.begin_array();
    w.begin_array();
    w.value(c.cov.a());
    w.value(c.cov.b());
    w.end_array();
    w.begin_array();
    w.value(c.cov.b());
    w.value(c.cov.c());
    w.end_array();
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

inline std::string mixture_to_json(const MixtureParams& m) {
  JsonWriter w;
  write_mixture(w, m);
  return w.str();
}

// ---------------------------------------------------------------------------
// density grids

// CSV with H rows of W comma-separated nonnegative values.
inline DensityGrid read_density_csv(std::istream& in, const std::string& name) {
  const auto rows = csv::parse_rows(in, name);
  const std::size_t w = rows.front().size();
  std::vector<double> mass;
  mass.reserve(rows.size() * w);
  for (const auto& r : rows) mass.insert(mass.end(), r.begin(), r.end());
  try {
    return DensityGrid(rows.size(), w, std::move(mass));
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
}

inline DensityGrid read_density_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return read_density_csv(in, path);
}

inline std::string density_to_csv(const DensityGrid& g) {
  std::string out;
  for (std::size_t i = 0; i < g.height; ++i) {
    for (std::size_t j = 0; j < g.width; ++j) {
      if (j) out += ',';
      out += format_double(g.at(i, j));
    }
    out += '\n';
  }
  return out;
}

// 8-bit binary PGM with max-normalized intensity.
inline std::string density_to_pgm(const DensityGrid& g) {
  double mx = 0.0;
  for (double m : g.mass) mx = std::max(mx, m);
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) +
                    "\n255\n";
  out.reserve(out.size() + g.mass.size());
  for (double m : g.mass) {
    const long px = std::lround(255.0 * m / mx);
    out += (char)(unsigned char)(px < 0 ? 0 : px > 255 ? 255 : px);
  }
  return out;
}

}  // namespace mca::io
