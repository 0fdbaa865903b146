#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uap/errors.hpp"

namespace uap {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major float32 tensor. Value type: copyable, immutable by
// convention once handed to another component.
struct Tensor {
    Shape shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<float> d);

    static Tensor zeros(const Shape& shape);
    static Tensor full(const Shape& shape, float value);

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    float max_abs() const;
};

// Throws ShapeError naming `op` when the two shapes differ.
void check_same_shape(const char* op, const Tensor& a, const Tensor& b);

}  // namespace uap
