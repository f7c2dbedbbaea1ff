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

#ifndef HANDMIMIC_RL_CURVE_HPP_
#define HANDMIMIC_RL_CURVE_HPP_

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "handmimic/errors.hpp"

namespace handmimic::rl {

// Numeric table with named columns, written as CSV with a fixed number
// format so reruns produce identical bytes.
class LearningCurve {
 public:
  explicit LearningCurve(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  void add(std::vector<double> row) {
    if (row.size() != columns_.size()) throw DimensionError("LearningCurve: row width mismatch");
    rows_.push_back(std::move(row));
  }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == name) return static_cast<int>(i);
    }
    throw InvalidSpec("LearningCurve: no column '" + name + "'");
  }

  // First value of `x_col` at which `y_col` >= threshold.
  std::optional<double> first_reaching(const std::string& y_col, double threshold,
                                       const std::string& x_col = "env_steps") const {
    const int y = column(y_col);
    const int x = column(x_col);
    for (const auto& r : rows_) {
      if (r[y] >= threshold) return r[x];
    }
    return std::nullopt;
  }

  static std::string format(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
  }

  void write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format(r[i]);
      os << '\n';
    }
  }

  void write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    write_csv(f);
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_CURVE_HPP_
