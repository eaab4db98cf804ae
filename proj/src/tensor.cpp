#include "evsr/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evsr {

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    init_strides();
    std::int64_t n = 1;
    for (int e : shape_) n *= e;
    data_.assign(static_cast<size_t>(n), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values) : shape_(std::move(shape)), data_(std::move(values)) {
    init_strides();
    std::int64_t n = 1;
    for (int e : shape_) n *= e;
    if (n != static_cast<std::int64_t>(data_.size()))
        throw std::invalid_argument("tensor: data length " + std::to_string(data_.size()) +
                                    " does not match shape " + format_shape(shape_));
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    for (auto &v : t.data_) v = value;
    return t;
}

void Tensor::init_strides() {
    if (shape_.empty()) throw std::invalid_argument("tensor: empty shape");
    if (shape_.size() > 5) throw std::invalid_argument("tensor: rank above 5 unsupported");
    // Extent 0 is allowed (an empty axis, e.g. zero event segments).
    for (int e : shape_)
        if (e < 0) throw std::invalid_argument("tensor: negative extent in shape " + format_shape(shape_));
    stride_.assign(shape_.size(), 1);
    for (int i = static_cast<int>(shape_.size()) - 2; i >= 0; --i)
        stride_[static_cast<size_t>(i)] = stride_[static_cast<size_t>(i) + 1] * shape_[static_cast<size_t>(i) + 1];
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_string() const { return format_shape(shape_); }

std::string format_shape(const std::vector<int> &shape) {
    std::ostringstream out;
    out << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ",";
        out << shape[i];
    }
    out << ")";
    return out.str();
}

void OpLedger::add(const std::string &kernel, std::uint64_t madds) { counters_[kernel] += madds; }

void OpLedger::merge(const OpLedger &other) {
    for (const auto &[name, count] : other.counters_) counters_[name] += count;
}

std::uint64_t OpLedger::total() const {
    std::uint64_t sum = 0;
    for (const auto &[name, count] : counters_) sum += count;
    return sum;
}

std::uint64_t OpLedger::count(const std::string &kernel) const {
    auto it = counters_.find(kernel);
    return it == counters_.end() ? 0 : it->second;
}

} // namespace evsr
