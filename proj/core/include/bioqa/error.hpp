// Copyright 2026 The bioqa Authors.
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

#ifndef BIOQA_ERROR_HPP_
#define BIOQA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace bioqa {

// Root of every error thrown by the library. Each subclass maps to one
// failure class that callers (chiefly the CLI) treat differently.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration detected at load time: out-of-range fractions, invalid
// regexes, malformed synonym tables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A source manifest's expected_count disagrees with what was ingested.
class ManifestViolation : public Error {
 public:
  ManifestViolation(std::string source, long long expected, long long actual);

  const std::string& source() const { return source_; }
  long long expected() const { return expected_; }
  long long actual() const { return actual_; }

 private:
  std::string source_;
  long long expected_;
  long long actual_;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// Connection refused, timeouts and other failures below HTTP.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The endpoint answered with a non-2xx status or violated the response
// contract (e.g. wrong number of choices).
class ProtocolError : public Error {
 public:
  ProtocolError(int status, const std::string& message);
  int status() const { return status_; }

 private:
  int status_;
};

// The response body could not be parsed.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace bioqa

#endif  // BIOQA_ERROR_HPP_
