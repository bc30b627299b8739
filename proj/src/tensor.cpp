#include "vad/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vad {

namespace {
AccumMode g_accum_mode = AccumMode::F32;
}

void set_accum_mode(AccumMode m) { g_accum_mode = m; }
AccumMode accum_mode() { return g_accum_mode; }

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor shape has non-positive dim " + shape_str(shape));
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

void require_shape(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape)), 0.0f) {}

Tensor::Tensor(std::vector<int> s, float fill)
    : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape)), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(data.size()); }

std::int64_t Tensor::at4(int a, int b, int c, int d) const {
    return ((static_cast<std::int64_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d;
}

std::int64_t Tensor::at5(int a, int b, int c, int d, int e) const {
    return (((static_cast<std::int64_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d) * shape[4] + e;
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::uniform(std::vector<int> s, float lo, float hi, std::mt19937_64& rng) {
    Tensor t(std::move(s));
    std::uniform_real_distribution<float> dist(lo, hi);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

}  // namespace vad
