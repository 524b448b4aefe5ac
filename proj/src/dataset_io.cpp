#include "mlr/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "mlr/error.hpp"

namespace mlr {

namespace {

[[noreturn]] void fail(const std::string& name, int line, const std::string& msg) {
  throw InputError(name + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

bool skip(const std::vector<std::string>& tok) { return tok.empty() || tok[0][0] == '#'; }

long parse_int(const std::string& s, const std::string& name, int line, const char* what) {
  long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(name, line, std::string("bad ") + what + " '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& name, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(name, line, "bad number '" + s + "'");
  if (!std::isfinite(v)) fail(name, line, "non-finite feature value");
  return v;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

}  // namespace

FeatureMatrix parse_features(std::istream& in, const std::string& name) {
  std::map<long, std::pair<int, std::vector<double>>> rows;  // id -> (line, values)
  std::size_t d = 0;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto tok = tokens(line);
    if (skip(tok)) continue;
    if (tok.size() < 2) fail(name, line_no, "expected a vertex id and at least one feature");
    const long id = parse_int(tok[0], name, line_no, "vertex id");
    if (id < 0) fail(name, line_no, "negative vertex id");
    if (d == 0) d = tok.size() - 1;
    if (tok.size() - 1 != d)
      fail(name, line_no, "expected " + std::to_string(d) + " features, found " + std::to_string(tok.size() - 1));
    std::vector<double> values;
    for (std::size_t c = 1; c < tok.size(); ++c) values.push_back(parse_real(tok[c], name, line_no));
    const auto [it, fresh] = rows.try_emplace(id, line_no, std::move(values));
    if (!fresh) fail(name, line_no, "duplicate vertex " + std::to_string(id) + " (first on line " + std::to_string(it->second.first) + ")");
  }
  if (rows.empty()) throw InputError(name + ": no vertices");
  long expect = 0;
  for (const auto& [id, row] : rows) {
    if (id != expect) fail(name, row.first, "vertex ids are not contiguous: missing " + std::to_string(expect));
    ++expect;
  }
  Matrix X(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rows.size()));
  for (const auto& [id, row] : rows)
    for (std::size_t a = 0; a < d; ++a) X(static_cast<Eigen::Index>(a), id) = row.second[a];
  return FeatureMatrix(std::move(X));
}

Dataset parse_dataset(std::istream& features, std::istream& edges, const std::string& features_name,
                      const std::string& edges_name) {
  FeatureMatrix X = parse_features(features, features_name);
  const int n = X.vertices();
  std::map<VertexPair, std::pair<int, int>> seen;  // pair -> (line, label)
  int line_no = 0;
  for (std::string line; std::getline(edges, line);) {
    ++line_no;
    const auto tok = tokens(line);
    if (skip(tok)) continue;
    if (tok.size() != 3) fail(edges_name, line_no, "expected 'i j y'");
    const long i = parse_int(tok[0], edges_name, line_no, "vertex id");
    const long j = parse_int(tok[1], edges_name, line_no, "vertex id");
    const long y = parse_int(tok[2], edges_name, line_no, "label");
    if (i < 0 || j < 0 || i >= n || j >= n) fail(edges_name, line_no, "vertex id out of range [0, " + std::to_string(n) + ")");
    if (i >= j) fail(edges_name, line_no, "pair must satisfy i < j");
    if (y != 0 && y != 1) fail(edges_name, line_no, "label must be 0 or 1");
    const VertexPair p{static_cast<int>(i), static_cast<int>(j)};
    const auto [it, fresh] = seen.try_emplace(p, line_no, static_cast<int>(y));
    if (!fresh)
      fail(edges_name, line_no, "duplicate pair (" + std::to_string(i) + ", " + std::to_string(j) + "), first on line " +
                                    std::to_string(it->second.first));
  }
  if (seen.empty()) throw InputError(edges_name + ": no observed pairs");
  std::vector<VertexPair> pairs;
  std::vector<int> labels;
  for (const auto& [p, v] : seen) {
    pairs.push_back(p);
    labels.push_back(v.second);
  }
  ObservationMask omega(n, std::move(pairs));
  return {std::move(X), std::move(omega), EdgeObservations::binary(labels)};
}

Dataset load_dataset(const std::string& features_path, const std::string& edges_path) {
  std::ifstream f = open(features_path);
  std::ifstream e = open(edges_path);
  return parse_dataset(f, e, features_path, edges_path);
}

void write_features(std::ostream& out, const FeatureMatrix& X) {
  for (int i = 0; i < X.vertices(); ++i) {
    out << i;
    for (int a = 0; a < X.dim(); ++a) out << ' ' << format_real(X.entries()(a, i));
    out << '\n';
  }
}

void write_edges(std::ostream& out, const ObservationMask& omega, const EdgeObservations& Y) {
  require_dims(omega.size() == Y.size(), "label count differs from mask size");
  require(!Y.is_fractional(), "only binary labels can be written");
  for (int t = 0; t < omega.size(); ++t) out << omega[t].i << ' ' << omega[t].j << ' ' << static_cast<int>(Y[t]) << '\n';
}

void save_dataset(const std::string& features_path, const std::string& edges_path, const Dataset& data) {
  std::ofstream f(features_path);
  std::ofstream e(edges_path);
  if (!f) throw InputError("cannot write " + features_path);
  if (!e) throw InputError("cannot write " + edges_path);
  write_features(f, data.X);
  write_edges(e, data.omega, data.Y);
}

}  // namespace mlr
