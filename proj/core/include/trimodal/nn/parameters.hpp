#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trimodal/error.hpp"

namespace trimodal::nn {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;

using ParamId = std::size_t;

// Named, ordered collection of parameter tensors. Layers keep ParamIds into
// it, so one layout serves every scalar type.
template <typename S>
class ParameterSet {
 public:
  ParamId add(std::string name, Matrix<S> value) {
    if (find(name)) throw ConfigError("duplicate parameter '" + name + "'");
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] const std::string& name(ParamId id) const { return names_[id]; }
  [[nodiscard]] const Matrix<S>& operator[](ParamId id) const { return values_[id]; }
  [[nodiscard]] Matrix<S>& operator[](ParamId id) { return values_[id]; }

  [[nodiscard]] std::optional<ParamId> find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

  template <typename T>
  [[nodiscard]] ParameterSet<T> cast() const {
    ParameterSet<T> out;
    for (std::size_t i = 0; i < values_.size(); ++i) out.add(names_[i], values_[i].template cast<T>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<S>> values_;
};

template <typename S>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterSet<S>& params) {
    grads_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      grads_.push_back(Matrix<S>::Zero(params[i].rows(), params[i].cols()));
    }
  }

  void zero() {
    for (auto& g : grads_) g.setZero();
  }
  [[nodiscard]] std::size_t size() const { return grads_.size(); }
  [[nodiscard]] Matrix<S>& operator[](ParamId id) { return grads_[id]; }
  [[nodiscard]] const Matrix<S>& operator[](ParamId id) const { return grads_[id]; }

 private:
  std::vector<Matrix<S>> grads_;
};

}  // namespace trimodal::nn
