#include "infusion/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace infusion {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.data_.assign(1, v);
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape), 0.0); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) { return Tensor(std::move(shape), v); }

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
  if (product(shape) != values.size()) {
    throw std::invalid_argument("Tensor::from: shape does not match value count");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

std::size_t Tensor::rows() const {
  if (ndim() != 2) throw std::logic_error("Tensor::rows: not a matrix, shape " + shape_str());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) throw std::logic_error("Tensor::cols: not a matrix, shape " + shape_str());
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

double Tensor::item() const {
  if (numel() != 1) throw std::logic_error("Tensor::item: tensor has " + std::to_string(numel()) + " elements");
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) { data_.assign(data_.size(), v); }

std::vector<double> Tensor::row(std::size_t r) const {
  const std::size_t d = cols();
  return std::vector<double>(data_.begin() + r * d, data_.begin() + (r + 1) * d);
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace infusion
