// Copyright 2026 The EI Explain Authors.
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

#ifndef EI_ERRORS_HPP_
#define EI_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ei {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: malformed files, out-of-range spans, invalid configs.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The model itself reported a failure for a request.
class ModelError : public Error {
 public:
  using Error::Error;
};

// The channel to an external predictor failed: spawn failure, broken pipe,
// closed stream or timeout.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The external predictor answered, but the answer violates ei-predict/1.
class ProtocolError : public Error {
 public:
  enum class Kind {
    kVersionMismatch,
    kMalformed,
    kIdMismatch,
    kLengthMismatch,
    kInvalidProbabilities,
    kTaskMismatch,
  };

  ProtocolError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace ei

#endif  // EI_ERRORS_HPP_
