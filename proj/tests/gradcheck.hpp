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

// Central finite differences shared by the gradient tests and the acceptance
// binary.

#ifndef HANDMIMIC_TESTS_GRADCHECK_HPP_
#define HANDMIMIC_TESTS_GRADCHECK_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <initializer_list>

namespace handmimic::testing {

inline Eigen::VectorXd CentralDifference(const Eigen::VectorXd& x,
                                         const std::function<double(const Eigen::VectorXd&)>& f,
                                         double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Same, perturbing the parameter vectors in place and re-evaluating `f`.
// Avoids copying large networks once per probe.
inline Eigen::VectorXd CentralDifferenceInPlace(std::initializer_list<Eigen::VectorXd*> parts,
                                                const std::function<double()>& f, double h = 1e-5) {
  Eigen::Index n = 0;
  for (const auto* p : parts) n += p->size();
  Eigen::VectorXd g(n);
  n = 0;
  for (auto* p : parts) {
    for (Eigen::Index i = 0; i < p->size(); ++i, ++n) {
      const double x = (*p)[i];
      (*p)[i] = x + h;
      const double up = f();
      (*p)[i] = x - h;
      const double down = f();
      (*p)[i] = x;
      g[n] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// |a - b| / max(|a|, |b|, floor), over whole vectors.
inline double RelativeError(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                            double floor = 1e-8) {
  const double scale = std::max({analytic.norm(), numeric.norm(), floor});
  return (analytic - numeric).norm() / scale;
}

}  // namespace handmimic::testing

#endif  // HANDMIMIC_TESTS_GRADCHECK_HPP_
