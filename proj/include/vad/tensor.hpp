#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace vad {

/// Dense float32 tensor, row-major. Shapes are fixed at construction;
/// ops never mutate an existing tensor's contents.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);
    Tensor(std::vector<int> s, float fill);
    Tensor(std::vector<int> s, std::vector<float> d);

    std::int64_t numel() const;
    int rank() const { return static_cast<int>(shape.size()); }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    float& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    // Flat offset helpers for the ranks the pipeline actually uses.
    std::int64_t at4(int a, int b, int c, int d) const;
    std::int64_t at5(int a, int b, int c, int d, int e) const;

    bool all_finite() const;

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s), 0.0f); }
    static Tensor full(std::vector<int> s, float v) { return Tensor(std::move(s), v); }
    static Tensor scalar(float v) { return Tensor({1}, std::vector<float>{v}); }
    static Tensor uniform(std::vector<int> s, float lo, float hi, std::mt19937_64& rng);
};

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);
void require_shape(bool ok, const std::string& msg);

/// Accumulation mode for convolution/reduction inner loops.
/// F32 is the production default; F64 routes convolutions through a
/// double-accumulating reference path for oracle tests.
enum class AccumMode { F32, F64 };
void set_accum_mode(AccumMode m);
AccumMode accum_mode();

/// Scoped accumulation-mode switch for tests.
struct AccumModeGuard {
    explicit AccumModeGuard(AccumMode m) : prev_(accum_mode()) { set_accum_mode(m); }
    ~AccumModeGuard() { set_accum_mode(prev_); }
  private:
    AccumMode prev_;
};

}  // namespace vad
