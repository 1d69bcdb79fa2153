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

#ifndef EI_PREDICTOR_HPP_
#define EI_PREDICTOR_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ei/kernels.hpp"

namespace ei {

enum class TaskKind { kRegression, kClassification };

struct Task {
  TaskKind kind = TaskKind::kRegression;
  std::size_t num_classes = 0;  // >= 2 iff classification

  static Task Regression() { return {TaskKind::kRegression, 0}; }
  static Task Classification(std::size_t num_classes);

  bool is_regression() const { return kind == TaskKind::kRegression; }
  bool is_classification() const { return kind == TaskKind::kClassification; }
  // Number of outputs per row: 1 for regression, num_classes otherwise.
  std::size_t width() const { return is_regression() ? 1 : num_classes; }

  friend bool operator==(const Task&, const Task&) = default;
};

std::string_view TaskName(TaskKind kind);
TaskKind ParseTaskKind(std::string_view name);

// Row-major matrix of token ids; all rows share one length.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  explicit TokenMatrix(std::size_t cols) : cols_(cols) {}
  TokenMatrix(std::size_t rows, std::size_t cols)
      : cols_(cols), data_(rows * cols, 0) {}

  static TokenMatrix FromRows(const std::vector<std::vector<TokenId>>& rows);

  std::size_t rows() const { return cols_ == 0 ? 0 : data_.size() / cols_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<const TokenId> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<TokenId> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  void AppendRow(std::span<const TokenId> values);

  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<TokenId> data_;
};

// One output per input row. Regression rows hold one value; classification
// rows hold a probability vector of num_classes entries.
class PredictionBatch {
 public:
  PredictionBatch() = default;
  PredictionBatch(std::size_t width, std::vector<double> values)
      : width_(width), values_(std::move(values)) {}

  std::size_t width() const { return width_; }
  std::size_t rows() const { return width_ == 0 ? 0 : values_.size() / width_; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * width_, width_};
  }
  double scalar(std::size_t r) const { return values_[r * width_]; }
  double at(std::size_t r, std::size_t cls) const {
    return values_[r * width_ + cls];
  }
  const std::vector<double>& values() const { return values_; }

  void Append(const PredictionBatch& other);

  friend bool operator==(const PredictionBatch&,
                         const PredictionBatch&) = default;

 private:
  std::size_t width_ = 0;
  std::vector<double> values_;
};

// Checks one-output-per-row and, for classification, that each row is a
// probability vector (entries in [0,1], sum within prob_tolerance of 1).
// Throws ModelError describing the first violation.
void ValidatePredictions(const PredictionBatch& batch, const Task& task,
                         std::size_t expected_rows, double prob_tolerance);

// Batch prediction contract. Implementations must be pure: identical rows
// give identical outputs whether sent alone, repeated or in any batch.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Task task() const = 0;
  // True when Predict may be called from several threads at once.
  virtual bool concurrent() const = 0;
  virtual PredictionBatch Predict(const TokenMatrix& rows) = 0;
};

// Forwards to an inner predictor, recording batch invocations and rows.
class CountingPredictor final : public Predictor {
 public:
  explicit CountingPredictor(Predictor& inner) : inner_(inner) {}

  Task task() const override { return inner_.task(); }
  bool concurrent() const override { return inner_.concurrent(); }
  PredictionBatch Predict(const TokenMatrix& rows) override;

  std::uint64_t invocations() const { return invocations_.load(); }
  std::uint64_t rows_predicted() const { return rows_.load(); }
  void Reset();

 private:
  Predictor& inner_;
  std::atomic<std::uint64_t> invocations_{0};
  std::atomic<std::uint64_t> rows_{0};
};

// Linear model over token indices. Regression uses bias and coefficients;
// classification uses one bias and one coefficient map per class and
// normalizes the per-class scores with softmax. Index 0 always contributes 0.
struct LinearModelSpec {
  double bias = 0.0;
  std::map<TokenId, double> coefficients;
  std::vector<double> class_biases;
  std::vector<std::map<TokenId, double>> class_coefficients;

  Task task() const;

  // Throws InvalidArgument on inconsistent class arrays, negative indices or
  // a nonzero coefficient for index 0.
  void Validate() const;

  static LinearModelSpec FromJson(std::string_view json_text);
  static LinearModelSpec Load(const std::string& path);
  std::string ToJson() const;
};

class LinearPredictor final : public Predictor {
 public:
  explicit LinearPredictor(
      const LinearModelSpec& spec,
      const kernels::KernelSet& kernels = kernels::ActiveKernels());

  Task task() const override { return task_; }
  bool concurrent() const override { return true; }
  PredictionBatch Predict(const TokenMatrix& rows) override;

  // Writes task().width() outputs for one row.
  void PredictRow(std::span<const TokenId> row, std::span<double> out) const;

 private:
  Task task_;
  const kernels::KernelSet* kernels_;
  std::vector<double> biases_;               // one per output
  std::vector<std::vector<double>> tables_;  // dense, index -> coefficient
};

// Single-row convenience over LinearPredictor.
std::vector<double> LinearPredict(const LinearModelSpec& spec,
                                  std::span<const TokenId> row);

}  // namespace ei

#endif  // EI_PREDICTOR_HPP_
