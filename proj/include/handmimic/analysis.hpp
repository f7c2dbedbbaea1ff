// Copyright 2026 The handmimic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HANDMIMIC_ANALYSIS_HPP_
#define HANDMIMIC_ANALYSIS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "handmimic/errors.hpp"

namespace handmimic::analysis {

// Sample Pearson correlation. Throws DegenerateInput when either input has
// zero variance.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("pearson: length mismatch");
  if (x.size() < 2) throw DegenerateInput("pearson: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson: zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct SweepRecord {
  int batch_size = 0;
  double gamma = 0.0;
  double learning_rate = 0.0;
  double log_std_init = 0.0;
  int n_epochs = 0;
  int n_steps = 0;
  bool ortho_init = false;
  double weight_decay = 0.0;
  double mean_reward = 0.0;
};

inline constexpr std::array<const char*, 9> kSweepColumns = {
    "batch_size", "gamma",  "learning_rate", "log_std_init", "n_epochs",
    "n_steps",    "ortho_init", "weight_decay", "mean_reward"};

// Column values in kSweepColumns order. With log_scale, learning_rate and
// weight_decay are replaced by their log10.
inline std::array<double, 9> record_values(const SweepRecord& r, bool log_scale = false) {
  return {static_cast<double>(r.batch_size),
          r.gamma,
          log_scale ? std::log10(r.learning_rate) : r.learning_rate,
          r.log_std_init,
          static_cast<double>(r.n_epochs),
          static_cast<double>(r.n_steps),
          r.ortho_init ? 1.0 : 0.0,
          log_scale ? std::log10(r.weight_decay) : r.weight_decay,
          r.mean_reward};
}

inline std::vector<double> column(const std::vector<SweepRecord>& records, int c, bool log_scale = false) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(record_values(r, log_scale)[c]);
  return out;
}

// 9x9 pairwise correlations; nullopt marks pairs involving a constant column.
struct CorrelationMatrix {
  std::array<std::array<std::optional<double>, 9>, 9> r;

  void write_csv(std::ostream& os) const {
    os << "parameter";
    for (const char* c : kSweepColumns) os << ',' << c;
    os << '\n';
    for (int i = 0; i < 9; ++i) {
      os << kSweepColumns[i];
      for (int j = 0; j < 9; ++j) {
        os << ',';
        if (r[i][j]) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f", *r[i][j]);
          os << buf;
        } else {
          os << "undefined";
        }
      }
      os << '\n';
    }
  }
};

inline CorrelationMatrix correlation_matrix(const std::vector<SweepRecord>& records, bool log_scale = false) {
  if (records.size() < 2) throw DegenerateInput("correlation_matrix: need at least two records");
  std::array<std::vector<double>, 9> cols;
  for (int c = 0; c < 9; ++c) cols[c] = column(records, c, log_scale);
  CorrelationMatrix m;
  for (int i = 0; i < 9; ++i) {
    for (int j = i; j < 9; ++j) {
      std::optional<double> v;
      try {
        v = i == j ? 1.0 : pearson(cols[i], cols[j]);
        if (i == j) pearson(cols[i], cols[i]);  // constant column -> undefined
      } catch (const DegenerateInput&) {
        v.reset();
      }
      m.r[i][j] = v;
      m.r[j][i] = v;
    }
  }
  return m;
}

namespace detail {

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

inline double ParseDouble(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("sweep line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

inline bool ParseBool(const std::string& s, int line) {
  if (s == "true" || s == "1" || s == "True") return true;
  if (s == "false" || s == "0" || s == "False") return false;
  throw ParseError("sweep line " + std::to_string(line) + ": bad boolean '" + s + "'");
}

}  // namespace detail

// CSV with a header naming the nine columns (any order).
inline std::vector<SweepRecord> parse_sweep(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("sweep: empty input");
  const auto header = detail::SplitCsv(line);
  std::array<int, 9> where;
  for (int c = 0; c < 9; ++c) {
    const auto it = std::find(header.begin(), header.end(), kSweepColumns[c]);
    if (it == header.end()) throw ParseError(std::string("sweep: missing column '") + kSweepColumns[c] + "'");
    where[c] = static_cast<int>(it - header.begin());
  }
  std::vector<SweepRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::SplitCsv(line);
    if (cells.size() != header.size()) {
      throw ParseError("sweep line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    SweepRecord r;
    r.batch_size = static_cast<int>(detail::ParseDouble(cells[where[0]], lineno));
    r.gamma = detail::ParseDouble(cells[where[1]], lineno);
    r.learning_rate = detail::ParseDouble(cells[where[2]], lineno);
    r.log_std_init = detail::ParseDouble(cells[where[3]], lineno);
    r.n_epochs = static_cast<int>(detail::ParseDouble(cells[where[4]], lineno));
    r.n_steps = static_cast<int>(detail::ParseDouble(cells[where[5]], lineno));
    r.ortho_init = detail::ParseBool(cells[where[6]], lineno);
    r.weight_decay = detail::ParseDouble(cells[where[7]], lineno);
    r.mean_reward = detail::ParseDouble(cells[where[8]], lineno);
    out.push_back(r);
  }
  return out;
}

inline std::vector<SweepRecord> load_sweep(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open sweep file " + path);
  return parse_sweep(f);
}

inline void write_sweep(std::ostream& os, const std::vector<SweepRecord>& records) {
  for (std::size_t i = 0; i < kSweepColumns.size(); ++i) os << (i ? "," : "") << kSweepColumns[i];
  os << '\n';
  for (const auto& r : records) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%g,%g,%g,%d,%d,%s,%g,%.2f\n", r.batch_size, r.gamma,
                  r.learning_rate, r.log_std_init, r.n_epochs, r.n_steps,
                  r.ortho_init ? "true" : "false", r.weight_decay, r.mean_reward);
    os << buf;
  }
}

// The published 46-run PPO sweep, in its printed order (descending reward).
inline std::vector<SweepRecord> table_a1() {
  static const char* kRows =
      "batch_size,gamma,learning_rate,log_std_init,n_epochs,n_steps,ortho_init,weight_decay,mean_reward\n"
      "128,0.9,1e-5,-2,10,1024,false,1e-5,1624.15\n"
      "128,0.9,1e-5,-2,10,512,false,1e-5,1585.71\n"
      "128,0.9,1e-5,-1,10,1024,false,1e-5,1531.93\n"
      "128,0.9,1e-5,-2,10,512,true,1e-5,1523.36\n"
      "128,0.9,1e-5,-1,10,512,false,1e-5,1482.61\n"
      "128,0.9,1e-5,-2,5,512,true,1e-5,1471.42\n"
      "128,0.9,1e-5,-2,5,512,false,1e-5,1448.38\n"
      "128,0.9,1e-5,-2,10,512,true,1e-5,1443.02\n"
      "128,0.9,1e-5,-2,5,512,true,1e-5,1422.17\n"
      "256,0.9,1e-5,-2,5,1024,true,1e-5,1413.56\n"
      "128,0.9,3e-5,-1,10,1024,false,1e-4,1389.84\n"
      "128,0.95,1e-5,-1,10,512,true,1e-5,1365.09\n"
      "128,0.9,1e-5,-1,5,1024,false,1e-5,1365.08\n"
      "128,0.95,1e-5,-1,10,512,false,1e-5,1345.54\n"
      "128,0.9,1e-5,-2,5,1024,true,1e-5,1328.81\n"
      "256,0.95,1e-5,-1,10,1024,false,1e-5,1316.15\n"
      "128,0.95,1e-5,-2,5,512,true,1e-5,1314.80\n"
      "128,0.9,3e-5,-1,10,1024,false,1e-5,1300.67\n"
      "128,0.95,1e-5,-2,10,512,true,1e-5,1297.27\n"
      "256,0.9,1e-5,-1,10,512,true,1e-5,1291.71\n"
      "128,0.9,1e-5,-2,10,4096,false,1e-5,1280.08\n"
      "128,0.9,3e-5,-2,10,1024,true,1e-5,1260.49\n"
      "256,0.9,1e-5,-1,5,1024,true,1e-5,1246.09\n"
      "256,0.95,1e-5,-1,10,1024,true,1e-4,1235.01\n"
      "128,0.95,1e-5,-1,10,1024,true,1e-5,1210.89\n"
      "256,0.9,1e-5,-1,10,1024,true,1e-5,1202.36\n"
      "256,0.95,3e-5,-2,10,512,true,1e-5,1194.46\n"
      "128,0.95,3e-5,-1,10,1024,false,1e-5,1124.79\n"
      "128,0.95,1e-5,-2,10,1024,false,1e-5,1123.54\n"
      "128,0.9,1e-5,-1,10,1024,true,1e-5,1120.74\n"
      "256,0.9,3e-6,-1,10,1024,false,1e-5,1079.17\n"
      "128,0.9,1e-6,-2,10,1024,true,1e-5,1072.54\n"
      "128,0.9,1e-6,-3,5,512,true,1e-5,1057.06\n"
      "128,0.9,3e-5,-2,3,4096,true,1e-5,1044.13\n"
      "128,0.95,1e-6,-2,5,1024,true,1e-5,1042.69\n"
      "128,0.9,3e-6,-1,5,1024,false,1e-5,997.65\n"
      "256,0.9,1e-6,-2,10,512,false,1e-5,958.96\n"
      "128,0.95,1e-6,-1,10,1024,false,1e-5,930.24\n"
      "512,0.9,3e-6,-3,3,4096,true,1e-5,929.63\n"
      "128,0.9,3e-5,-1,10,512,false,1e-5,922.81\n"
      "256,0.9,3e-5,-2,5,1024,true,1e-5,915.33\n"
      "128,0.95,1e-6,-1,10,512,false,1e-5,898.50\n"
      "128,0.9,1e-6,-1,10,512,true,1e-5,893.27\n"
      "128,0.95,1e-6,-1,5,512,true,1e-5,883.68\n"
      "128,0.95,3e-5,-2,5,4096,false,1e-5,870.71\n"
      "128,0.9,1e-5,-3,10,1024,false,1e-5,854.40\n";
  std::istringstream in(kRows);
  return parse_sweep(in);
}

inline std::vector<SweepRecord> sorted_by_reward(std::vector<SweepRecord> records, bool ascending = true) {
  std::stable_sort(records.begin(), records.end(), [ascending](const SweepRecord& a, const SweepRecord& b) {
    return ascending ? a.mean_reward < b.mean_reward : a.mean_reward > b.mean_reward;
  });
  return records;
}

// Diverging blue/white/red heatmap of a correlation matrix.
inline std::string correlation_svg(const CorrelationMatrix& m) {
  const int cell = 60;
  const int margin = 120;
  const int size = margin + 9 * cell + 10;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int i = 0; i < 9; ++i) {
    os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + i * cell + cell / 2
       << "\" text-anchor=\"end\">" << kSweepColumns[i] << "</text>\n";
    os << "<text transform=\"translate(" << margin + i * cell + cell / 2 << "," << margin - 4
       << ") rotate(-45)\">" << kSweepColumns[i] << "</text>\n";
    for (int j = 0; j < 9; ++j) {
      std::string fill = "#cccccc";
      std::string label = "n/a";
      if (m.r[i][j]) {
        const double v = *m.r[i][j];
        const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(v))));
        char buf[16];
        if (v >= 0) {
          std::snprintf(buf, sizeof(buf), "#ff%02x%02x", fade, fade);
        } else {
          std::snprintf(buf, sizeof(buf), "#%02x%02xff", fade, fade);
        }
        fill = buf;
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        label = buf;
      }
      os << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      os << "<text x=\"" << margin + j * cell + cell / 2 << "\" y=\"" << margin + i * cell + cell / 2 + 4
         << "\" text-anchor=\"middle\">" << label << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace handmimic::analysis

#endif  // HANDMIMIC_ANALYSIS_HPP_
