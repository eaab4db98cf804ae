#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

namespace evsr {

// Dense row-major float32 array, rank 1..5.
// Rank-4 layout convention across the project: (time, channel, height, width).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> values);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float value);

    const std::vector<int> &shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int axis) const { return shape_[static_cast<size_t>(axis)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool same_shape(const Tensor &other) const { return shape_ == other.shape_; }

    float *data() { return data_.data(); }
    const float *data() const { return data_.data(); }
    std::vector<float> &values() { return data_; }
    const std::vector<float> &values() const { return data_; }

    float &operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

    std::int64_t index(int i0) const { return i0; }
    std::int64_t index(int i0, int i1) const {
        return static_cast<std::int64_t>(i0) * stride_[0] + i1;
    }
    std::int64_t index(int i0, int i1, int i2) const {
        return static_cast<std::int64_t>(i0) * stride_[0] + static_cast<std::int64_t>(i1) * stride_[1] + i2;
    }
    std::int64_t index(int i0, int i1, int i2, int i3) const {
        return static_cast<std::int64_t>(i0) * stride_[0] + static_cast<std::int64_t>(i1) * stride_[1] +
               static_cast<std::int64_t>(i2) * stride_[2] + i3;
    }
    std::int64_t index(int i0, int i1, int i2, int i3, int i4) const {
        return static_cast<std::int64_t>(i0) * stride_[0] + static_cast<std::int64_t>(i1) * stride_[1] +
               static_cast<std::int64_t>(i2) * stride_[2] + static_cast<std::int64_t>(i3) * stride_[3] + i4;
    }

    float &at(int i0) { return data_[static_cast<size_t>(index(i0))]; }
    float &at(int i0, int i1) { return data_[static_cast<size_t>(index(i0, i1))]; }
    float &at(int i0, int i1, int i2) { return data_[static_cast<size_t>(index(i0, i1, i2))]; }
    float &at(int i0, int i1, int i2, int i3) { return data_[static_cast<size_t>(index(i0, i1, i2, i3))]; }
    float &at(int i0, int i1, int i2, int i3, int i4) {
        return data_[static_cast<size_t>(index(i0, i1, i2, i3, i4))];
    }
    float at(int i0) const { return data_[static_cast<size_t>(index(i0))]; }
    float at(int i0, int i1) const { return data_[static_cast<size_t>(index(i0, i1))]; }
    float at(int i0, int i1, int i2) const { return data_[static_cast<size_t>(index(i0, i1, i2))]; }
    float at(int i0, int i1, int i2, int i3) const { return data_[static_cast<size_t>(index(i0, i1, i2, i3))]; }
    float at(int i0, int i1, int i2, int i3, int i4) const {
        return data_[static_cast<size_t>(index(i0, i1, i2, i3, i4))];
    }

    bool all_finite() const;
    std::string shape_string() const;

private:
    std::vector<int> shape_;
    std::vector<std::int64_t> stride_;
    std::vector<float> data_;

    void init_strides();
};

// Accumulated multiply-add counts per kernel, keyed by kernel name.
// Counts are pure functions of the input shapes. One ledger per worker;
// merge() combines results from parallel sections.
class OpLedger {
public:
    void add(const std::string &kernel, std::uint64_t madds);
    void reset() { counters_.clear(); }
    void merge(const OpLedger &other);

    std::uint64_t total() const;
    std::uint64_t count(const std::string &kernel) const;
    const std::map<std::string, std::uint64_t> &counters() const { return counters_; }

private:
    std::map<std::string, std::uint64_t> counters_;
};

std::string format_shape(const std::vector<int> &shape);

} // namespace evsr
