// Copyright 2026 The lcwl Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lcwl {

/// Base class for every error raised by the library. The CLI maps the
/// category onto its exit status.
class Error : public std::runtime_error {
 public:
  enum class Category { kUsage, kData, kInternal };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

#define LCWL_DEFINE_ERROR(Name, Cat)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Category::Cat, what) {} \
  };

LCWL_DEFINE_ERROR(EmptyInput, kData)
LCWL_DEFINE_ERROR(DimensionMismatch, kData)
LCWL_DEFINE_ERROR(DegenerateDataset, kData)
LCWL_DEFINE_ERROR(LevelOutOfRange, kData)
LCWL_DEFINE_ERROR(SequenceTooLong, kData)
LCWL_DEFINE_ERROR(EmptyCorpus, kData)
LCWL_DEFINE_ERROR(IoError, kData)
LCWL_DEFINE_ERROR(MissingScore, kData)
LCWL_DEFINE_ERROR(RatioError, kUsage)
LCWL_DEFINE_ERROR(ConfigError, kUsage)
LCWL_DEFINE_ERROR(InvalidArgument, kUsage)
LCWL_DEFINE_ERROR(InvariantViolation, kInternal)

#undef LCWL_DEFINE_ERROR

/// Malformed input row; `row` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error(Category::kData, "row " + std::to_string(row) + ": " + what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace lcwl
