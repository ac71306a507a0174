#pragma once

// Textual model file. Layout:
//
//   ddosnet-model 1
//   seed <train seed>
//   threshold <x>
//   arch <single-line JSON>
//   features <n>            followed by n lines, one feature name each
//   scaler_mean <n> v...
//   scaler_std <n> v...
//   scaler_fitted_on <rows>
//   fill <n> v...           replacement values for +-inf, per feature
//   param <name> <rows> <cols> v...
//   buffer <name> <rows> <cols> v...
//   end
//
// Floats are written with 17 significant digits, so a load/save round trip
// reproduces the file byte for byte.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddosnet/config.hpp"
#include "ddosnet/error.hpp"
#include "ddosnet/flow_data.hpp"
#include "ddosnet/nn/model.hpp"

namespace ddosnet {

inline constexpr int kModelFormatVersion = 1;

struct ModelBundle {
  nn::ArchConfig arch;
  nn::ModelParams params;
  std::vector<std::string> feature_names;
  ScalerParams scaler;
  std::vector<double> fill_values;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

inline void write_values(std::ostream& out, std::span<const double> v) {
  for (double x : v) out << ' ' << fmt17(x);
  out << '\n';
}

inline double parse_number(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw DataError("model file: bad number '" + tok + "' in " + where);
  return v;
}

class LineParser {
public:
  explicit LineParser(std::istream& in) : in_(in) {}

  std::istringstream next(const std::string& expected_tag) {
    std::string line;
    if (!std::getline(in_, line)) throw DataError("model file: unexpected end, expected '" + expected_tag + "'");
    ++lineno_;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != expected_tag)
      throw DataError("model file line " + std::to_string(lineno_) + ": expected '" + expected_tag +
                      "', found '" + tag + "'");
    ss.get();  // single separating space
    return ss;
  }

  std::string raw_line() {
    std::string line;
    if (!std::getline(in_, line)) throw DataError("model file: unexpected end");
    ++lineno_;
    return line;
  }

  std::vector<double> values(std::istringstream& ss, std::size_t n, const std::string& where) {
    std::vector<double> v;
    v.reserve(n);
    std::string tok;
    while (ss >> tok) v.push_back(parse_number(tok, where));
    if (v.size() != n)
      throw DataError("model file: " + where + " has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(n));
    return v;
  }

private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace detail

inline void save_model(std::ostream& out, const ModelBundle& b) {
  out << "ddosnet-model " << kModelFormatVersion << '\n';
  out << "seed " << b.seed << '\n';
  out << "threshold " << detail::fmt17(b.threshold) << '\n';
  out << "arch " << to_json(b.arch).dump() << '\n';
  out << "features " << b.feature_names.size() << '\n';
  for (const auto& n : b.feature_names) out << n << '\n';
  out << "scaler_mean " << b.scaler.means.size();
  detail::write_values(out, b.scaler.means);
  out << "scaler_std " << b.scaler.stds.size();
  detail::write_values(out, b.scaler.stds);
  out << "scaler_fitted_on " << b.scaler.fitted_on << '\n';
  out << "fill " << b.fill_values.size();
  detail::write_values(out, b.fill_values);
  for (const auto& t : nn::parameters(b.params)) {
    out << "param " << t.name << ' ' << t.rows << ' ' << t.cols;
    detail::write_values(out, t.values);
  }
  for (const auto& t : nn::buffers(b.params)) {
    out << "buffer " << t.name << ' ' << t.rows << ' ' << t.cols;
    detail::write_values(out, t.values);
  }
  out << "end\n";
}

inline void save_model(const std::string& path, const ModelBundle& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  save_model(out, b);
}

inline ModelBundle load_model(std::istream& in) {
  detail::LineParser p(in);
  ModelBundle b;
  {
    auto ss = p.next("ddosnet-model");
    int version = 0;
    ss >> version;
    if (version != kModelFormatVersion)
      throw DataError("model file: unsupported format version " + std::to_string(version));
  }
  p.next("seed") >> b.seed;
  {
    auto ss = p.next("threshold");
    std::string tok;
    ss >> tok;
    b.threshold = detail::parse_number(tok, "threshold");
  }
  {
    auto ss = p.next("arch");
    std::string js;
    std::getline(ss, js);
    try {
      b.arch = arch_from_json(nlohmann::json::parse(js));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("model file: bad arch line: ") + e.what());
    } catch (const ConfigError& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
  }
  std::size_t nf = 0;
  p.next("features") >> nf;
  for (std::size_t i = 0; i < nf; ++i) b.feature_names.push_back(p.raw_line());
  {
    std::size_t n = 0;
    auto ss = p.next("scaler_mean");
    ss >> n;
    b.scaler.means = p.values(ss, n, "scaler_mean");
  }
  {
    std::size_t n = 0;
    auto ss = p.next("scaler_std");
    ss >> n;
    b.scaler.stds = p.values(ss, n, "scaler_std");
  }
  p.next("scaler_fitted_on") >> b.scaler.fitted_on;
  {
    std::size_t n = 0;
    auto ss = p.next("fill");
    ss >> n;
    b.fill_values = p.values(ss, n, "fill");
  }
  if (b.scaler.means.size() != nf || b.scaler.stds.size() != nf || b.fill_values.size() != nf)
    throw DataError("model file: scaler width does not match feature count");

  b.params = nn::make_model(nf, b.arch);
  for (auto& t : nn::parameters(b.params)) {
    auto ss = p.next("param");
    std::string name;
    std::size_t rows = 0, cols = 0;
    ss >> name >> rows >> cols;
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw DataError("model file: expected tensor " + t.name + " " + std::to_string(t.rows) + "x" +
                      std::to_string(t.cols) + ", found " + name + " " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    const auto v = p.values(ss, t.values.size(), name);
    std::copy(v.begin(), v.end(), t.values.begin());
  }
  for (auto& t : nn::buffers(b.params)) {
    auto ss = p.next("buffer");
    std::string name;
    std::size_t rows = 0, cols = 0;
    ss >> name >> rows >> cols;
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw DataError("model file: expected buffer " + t.name + ", found " + name);
    const auto v = p.values(ss, t.values.size(), name);
    std::copy(v.begin(), v.end(), t.values.begin());
  }
  p.next("end");
  return b;
}

inline ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace ddosnet
