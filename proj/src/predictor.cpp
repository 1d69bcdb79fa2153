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

#include "ei/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ei/errors.hpp"
#include "json.hpp"

namespace ei {

Task Task::Classification(std::size_t num_classes) {
  if (num_classes < 2) {
    throw InvalidArgument("classification needs at least 2 classes");
  }
  return {TaskKind::kClassification, num_classes};
}

std::string_view TaskName(TaskKind kind) {
  return kind == TaskKind::kRegression ? "regression" : "classification";
}

TaskKind ParseTaskKind(std::string_view name) {
  if (name == "regression") return TaskKind::kRegression;
  if (name == "classification") return TaskKind::kClassification;
  throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

TokenMatrix TokenMatrix::FromRows(
    const std::vector<std::vector<TokenId>>& rows) {
  if (rows.empty()) return TokenMatrix();
  TokenMatrix m(rows.front().size());
  for (const auto& r : rows) m.AppendRow(r);
  return m;
}

void TokenMatrix::AppendRow(std::span<const TokenId> values) {
  if (values.size() != cols_) {
    throw InvalidArgument("token matrix: row length " +
                          std::to_string(values.size()) + " != " +
                          std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void PredictionBatch::Append(const PredictionBatch& other) {
  if (values_.empty()) width_ = other.width_;
  if (other.width_ != width_) {
    throw InvalidArgument("prediction batch: width mismatch on append");
  }
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
}

void ValidatePredictions(const PredictionBatch& batch, const Task& task,
                         std::size_t expected_rows, double prob_tolerance) {
  if (batch.width() != task.width() && expected_rows > 0) {
    throw ModelError("predictor returned width " +
                     std::to_string(batch.width()) + ", expected " +
                     std::to_string(task.width()));
  }
  if (batch.rows() != expected_rows) {
    throw ModelError("predictor returned " + std::to_string(batch.rows()) +
                     " outputs for " + std::to_string(expected_rows) +
                     " rows");
  }
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    double sum = 0.0;
    for (double v : batch.row(r)) {
      if (!std::isfinite(v)) {
        throw ModelError("predictor returned a non-finite output in row " +
                         std::to_string(r));
      }
      if (task.is_classification() && (v < 0.0 || v > 1.0)) {
        throw ModelError("probability outside [0,1] in row " +
                         std::to_string(r));
      }
      sum += v;
    }
    if (task.is_classification() && std::abs(sum - 1.0) > prob_tolerance) {
      throw ModelError("probabilities in row " + std::to_string(r) +
                       " sum to " + std::to_string(sum));
    }
  }
}

PredictionBatch CountingPredictor::Predict(const TokenMatrix& rows) {
  invocations_.fetch_add(1);
  rows_.fetch_add(rows.rows());
  return inner_.Predict(rows);
}

void CountingPredictor::Reset() {
  invocations_.store(0);
  rows_.store(0);
}

// ---------------------------------------------------------------------------
// LinearModelSpec

Task LinearModelSpec::task() const {
  if (class_biases.empty() && class_coefficients.empty()) {
    return Task::Regression();
  }
  return Task::Classification(class_biases.size());
}

void LinearModelSpec::Validate() const {
  auto check_map = [](const std::map<TokenId, double>& coeffs) {
    for (const auto& [index, value] : coeffs) {
      if (index < 0) {
        throw InvalidArgument("linear model: negative token index " +
                              std::to_string(index));
      }
      if (index == 0 && value != 0.0) {
        throw InvalidArgument(
            "linear model: index 0 means absence and must have coefficient 0");
      }
      if (!std::isfinite(value)) {
        throw InvalidArgument("linear model: non-finite coefficient");
      }
    }
  };
  if (!std::isfinite(bias)) throw InvalidArgument("linear model: bad bias");
  check_map(coefficients);
  if (class_biases.size() != class_coefficients.size()) {
    throw InvalidArgument(
        "linear model: class_biases and class_coefficients differ in length");
  }
  if (!class_biases.empty()) {
    if (class_biases.size() < 2) {
      throw InvalidArgument("linear model: classification needs >= 2 classes");
    }
    if (!coefficients.empty()) {
      throw InvalidArgument(
          "linear model: both regression and class coefficients given");
    }
    for (double b : class_biases) {
      if (!std::isfinite(b)) throw InvalidArgument("linear model: bad bias");
    }
    for (const auto& m : class_coefficients) check_map(m);
  }
}

namespace {

std::map<TokenId, double> ParseCoefficients(const nlohmann::json& obj) {
  if (!obj.is_object()) {
    throw InvalidArgument("linear model: coefficients must be an object");
  }
  std::map<TokenId, double> out;
  for (const auto& [key, value] : obj.items()) {
    long long index = 0;
    std::size_t used = 0;
    try {
      index = std::stoll(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || key.empty()) {
      throw InvalidArgument("linear model: coefficient key '" + key +
                            "' is not an integer");
    }
    if (!value.is_number()) {
      throw InvalidArgument("linear model: coefficient for '" + key +
                            "' is not a number");
    }
    out[static_cast<TokenId>(index)] = value.get<double>();
  }
  return out;
}

nlohmann::ordered_json CoefficientsToJson(
    const std::map<TokenId, double>& coeffs) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& [index, value] : coeffs) obj[std::to_string(index)] = value;
  return obj;
}

}  // namespace

LinearModelSpec LinearModelSpec::FromJson(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("linear model: ") + e.what());
  }
  if (!doc.is_object()) {
    throw InvalidArgument("linear model: top level must be an object");
  }
  LinearModelSpec spec;
  if (doc.contains("bias")) {
    if (!doc["bias"].is_number()) {
      throw InvalidArgument("linear model: bias must be a number");
    }
    spec.bias = doc["bias"].get<double>();
  }
  if (doc.contains("coefficients")) {
    spec.coefficients = ParseCoefficients(doc["coefficients"]);
  }
  if (doc.contains("class_biases")) {
    const auto& biases = doc["class_biases"];
    if (!biases.is_array()) {
      throw InvalidArgument("linear model: class_biases must be an array");
    }
    for (const auto& b : biases) {
      if (!b.is_number()) {
        throw InvalidArgument("linear model: class bias must be a number");
      }
      spec.class_biases.push_back(b.get<double>());
    }
  }
  if (doc.contains("class_coefficients")) {
    const auto& classes = doc["class_coefficients"];
    if (!classes.is_array()) {
      throw InvalidArgument(
          "linear model: class_coefficients must be an array");
    }
    for (const auto& c : classes) {
      spec.class_coefficients.push_back(ParseCoefficients(c));
    }
  }
  spec.Validate();
  return spec;
}

LinearModelSpec LinearModelSpec::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("linear model: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

std::string LinearModelSpec::ToJson() const {
  nlohmann::ordered_json doc;
  doc["bias"] = bias;
  doc["coefficients"] = CoefficientsToJson(coefficients);
  if (!class_biases.empty()) {
    doc["class_biases"] = class_biases;
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (const auto& m : class_coefficients) {
      classes.push_back(CoefficientsToJson(m));
    }
    doc["class_coefficients"] = std::move(classes);
  }
  return doc.dump();
}

// ---------------------------------------------------------------------------
// LinearPredictor

namespace {

std::vector<double> DenseTable(const std::map<TokenId, double>& coeffs) {
  const TokenId max_index = coeffs.empty() ? 0 : coeffs.rbegin()->first;
  std::vector<double> table(static_cast<std::size_t>(max_index) + 1, 0.0);
  for (const auto& [index, value] : coeffs) {
    table[static_cast<std::size_t>(index)] = value;
  }
  table[0] = 0.0;
  return table;
}

}  // namespace

LinearPredictor::LinearPredictor(const LinearModelSpec& spec,
                                 const kernels::KernelSet& kernels)
    : kernels_(&kernels) {
  spec.Validate();
  task_ = spec.task();
  if (task_.is_regression()) {
    biases_.push_back(spec.bias);
    tables_.push_back(DenseTable(spec.coefficients));
  } else {
    biases_ = spec.class_biases;
    for (const auto& m : spec.class_coefficients) {
      tables_.push_back(DenseTable(m));
    }
  }
}

void LinearPredictor::PredictRow(std::span<const TokenId> row,
                                 std::span<double> out) const {
  const std::size_t width = biases_.size();
  for (std::size_t c = 0; c < width; ++c) {
    out[c] = biases_[c] + kernels_->gather_sum(tables_[c], row);
  }
  if (task_.is_regression()) return;

  const double peak = *std::max_element(out.begin(), out.begin() + width);
  double total = 0.0;
  for (std::size_t c = 0; c < width; ++c) {
    out[c] = std::exp(out[c] - peak);
    total += out[c];
  }
  for (std::size_t c = 0; c < width; ++c) out[c] /= total;
}

PredictionBatch LinearPredictor::Predict(const TokenMatrix& rows) {
  const std::size_t width = task_.width();
  std::vector<double> values(rows.rows() * width);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    PredictRow(rows.row(r), std::span<double>(values.data() + r * width, width));
  }
  return PredictionBatch(width, std::move(values));
}

std::vector<double> LinearPredict(const LinearModelSpec& spec,
                                  std::span<const TokenId> row) {
  LinearPredictor model(spec);
  std::vector<double> out(model.task().width());
  model.PredictRow(row, out);
  return out;
}

}  // namespace ei
