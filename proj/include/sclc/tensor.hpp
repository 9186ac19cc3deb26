#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sclc {

inline std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

// Dense n-dimensional array of 64-bit floats, row-major.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (std::size_t e : shape_) {
            if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape " + shape_string(shape_));
            n *= e;
        }
        data_.assign(n, fill);
    }

    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data) {
        Tensor t(std::move(shape));
        if (data.size() != t.size())
            throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_string(t.shape()));
        t.data_ = std::move(data);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    double& at(std::size_t a, std::size_t b, std::size_t c) {
        return data_[(a * shape_[1] + b) * shape_[2] + c];
    }
    double at(std::size_t a, std::size_t b, std::size_t c) const {
        return data_[(a * shape_[1] + b) * shape_[2] + c];
    }

    double& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    double at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min_value() const {
        double m = data_.empty() ? 0.0 : data_[0];
        for (double v : data_) m = std::min(m, v);
        return m;
    }

    double max_value() const {
        double m = data_.empty() ? 0.0 : data_[0];
        for (double v : data_) m = std::max(m, v);
        return m;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline void require_shape(const Tensor& t, const std::vector<std::size_t>& shape,
                          const std::string& what) {
    if (t.shape() != shape)
        throw std::invalid_argument(what + ": expected shape " + shape_string(shape) + ", got " +
                                    shape_string(t.shape()));
}

inline void require_rank(const Tensor& t, std::size_t rank, const std::string& what) {
    if (t.rank() != rank)
        throw std::invalid_argument(what + ": expected rank " + std::to_string(rank) + ", got " +
                                    shape_string(t.shape()));
}

}  // namespace sclc
