#include "grips/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace grips {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool numbered(const std::string& name, char prefix, int expected) {
  return name == std::string(1, prefix) + std::to_string(expected);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  return f;
}

} // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    double back;
    if (parse_double(buf, back) && back == x) break;
  }
  return buf;
}

ObservedData read_data_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError(path + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 3 || header[0] != "lon" || header[1] != "lat")
    throw IoError(path + ": header must start with lon,lat,y1");
  int q = 0, p = 0;
  std::size_t c = 2;
  while (c < header.size() && numbered(header[c], 'y', q + 1)) ++q, ++c;
  while (c < header.size() && numbered(header[c], 'x', p + 1)) ++p, ++c;
  if (q == 0 || c != header.size())
    throw IoError(path + ": expected columns lon,lat,y1..yq,x1..xp");

  std::vector<std::array<double, 2>> loc;
  std::vector<double> ys, xs;
  long lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw IoError(path + ":" + std::to_string(lineno) + ": wrong number of fields");
    std::array<double, 2> l{};
    for (int a = 0; a < 2; ++a)
      if (!parse_double(trim(fields[a]), l[a]) || !std::isfinite(l[a]))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad coordinate");
    loc.push_back(l);
    for (int j = 0; j < q; ++j) {
      const std::string s = trim(fields[2 + j]);
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!s.empty() && (!parse_double(s, v) || !std::isfinite(v)))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad outcome '" + s + "'");
      ys.push_back(v);
    }
    for (int a = 0; a < p; ++a) {
      double v;
      if (!parse_double(trim(fields[2 + q + a]), v) || !std::isfinite(v))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad covariate");
      xs.push_back(v);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(loc.size());
  ObservedData d;
  d.locations.resize(n, kDim);
  d.y.resize(n, q);
  d.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.locations(i, 0) = loc[i][0];
    d.locations(i, 1) = loc[i][1];
    for (int j = 0; j < q; ++j) d.y(i, j) = ys[i * q + j];
    for (int a = 0; a < p; ++a) d.X(i, a) = xs[i * p + a];
  }
  return d;
}

void write_data_csv(const std::string& path, const ObservedData& d) {
  auto f = open_out(path);
  f << "lon,lat";
  for (Eigen::Index j = 0; j < d.q(); ++j) f << ",y" << j + 1;
  for (Eigen::Index a = 0; a < d.p(); ++a) f << ",x" << a + 1;
  f << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    f << format_double(d.locations(i, 0)) << ',' << format_double(d.locations(i, 1));
    for (Eigen::Index j = 0; j < d.q(); ++j) f << ',' << format_double(d.y(i, j));
    for (Eigen::Index a = 0; a < d.p(); ++a) f << ',' << format_double(d.X(i, a));
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

void write_chain_csv(const std::string& path, const ChainStore& chain) {
  auto f = open_out(path);
  const auto names = chain.column_names();
  f << "iteration";
  for (const auto& n : names) f << ',' << n;
  f << '\n';
  const Mat t = chain.table();
  for (Eigen::Index d = 0; d < t.rows(); ++d) {
    f << chain.draws[d].iteration;
    for (Eigen::Index c = 0; c < t.cols(); ++c) f << ',' << format_double(t(d, c));
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

std::string quantile_label(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%04.1f", 100.0 * level);
  return buf;
}

void write_predictions_csv(const std::string& path, const PredictionSummary& pred) {
  auto f = open_out(path);
  f << "lon,lat,outcome,mean";
  for (double l : pred.levels) f << ',' << quantile_label(l);
  f << ",interval_width\n";
  const std::size_t nl = pred.levels.size();
  for (Eigen::Index i = 0; i < pred.locations.rows(); ++i)
    for (std::size_t o = 0; o < pred.outcomes.size(); ++o) {
      f << format_double(pred.locations(i, 0)) << ',' << format_double(pred.locations(i, 1))
        << ',' << pred.outcomes[o] + 1 << ',' << format_double(pred.mean(i, o));
      for (std::size_t l = 0; l < nl; ++l) f << ',' << format_double(pred.quantiles[l](i, o));
      const double width = nl >= 2 ? pred.quantiles[nl - 1](i, o) - pred.quantiles[0](i, o) : 0.0;
      f << ',' << format_double(width) << '\n';
    }
  if (!f) throw IoError("write failed: " + path);
}

void write_latent_map_csv(const std::string& path, const LatentMap& map, const Mesh& mesh) {
  auto f = open_out(path);
  f << "lon,lat,outcome,mean";
  for (double l : map.levels) f << ',' << quantile_label(l);
  f << '\n';
  for (Eigen::Index i = 0; i < map.mean.rows(); ++i)
    for (Eigen::Index j = 0; j < map.mean.cols(); ++j) {
      f << format_double(mesh.grid.points(i, 0)) << ',' << format_double(mesh.grid.points(i, 1))
        << ',' << j + 1 << ',' << format_double(map.mean(i, j));
      for (const auto& q : map.quantiles) f << ',' << format_double(q(i, j));
      f << '\n';
    }
  if (!f) throw IoError("write failed: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

} // namespace grips
