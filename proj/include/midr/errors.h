// Copyright 2026 The MIDR Authors.
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

#ifndef MIDR_ERRORS_H_
#define MIDR_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace midr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unbalanced or unterminated Wikitext markup. offset() is a byte offset into
// the text that was being parsed.
class MalformedMarkup : public Error {
 public:
  MalformedMarkup(const std::string &what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class NotAnIdentifier : public Error {
 public:
  using Error::Error;
};

// Placeholder numbering or offset bookkeeping went wrong.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class AnnotationAlignmentError : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class DimensionalityError : public Error {
 public:
  using Error::Error;
};

class CatalogMismatch : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace midr

#endif  // MIDR_ERRORS_H_
