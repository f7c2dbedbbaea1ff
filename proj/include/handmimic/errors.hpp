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

#ifndef HANDMIMIC_ERRORS_HPP_
#define HANDMIMIC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace handmimic {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HANDMIMIC_DEFINE_ERROR(Name) \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

HANDMIMIC_DEFINE_ERROR(ParseError);
HANDMIMIC_DEFINE_ERROR(DimensionError);
HANDMIMIC_DEFINE_ERROR(InvalidSpec);
HANDMIMIC_DEFINE_ERROR(ConfigError);
HANDMIMIC_DEFINE_ERROR(NonFiniteState);
HANDMIMIC_DEFINE_ERROR(NonFiniteLoss);
HANDMIMIC_DEFINE_ERROR(ShapeError);
HANDMIMIC_DEFINE_ERROR(SingularKernel);
HANDMIMIC_DEFINE_ERROR(DegenerateInput);

#undef HANDMIMIC_DEFINE_ERROR

}  // namespace handmimic

#endif  // HANDMIMIC_ERRORS_HPP_
