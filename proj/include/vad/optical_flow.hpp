#pragma once

#include <string>
#include <utility>

#include "vad/image.hpp"

namespace vad {

/// Per-pixel displacement between two frames, in pixels.
/// u is the horizontal (column) component, v the vertical (row) component.
struct FlowField {
    Image u, v;
};

/// Per-pixel quadratic model f(p+d) ~ c + bx*dx + by*dy + axx*dx^2 + ayy*dy^2 + axy*dx*dy.
/// The quadratic form matrix is A = [[axx, axy/2], [axy/2, ayy]], symmetric by
/// construction.
struct PolyExpansion {
    Image c, bx, by, axx, ayy, axy;
};

struct FlowParams {
    int levels = 3;
    float pyr_scale = 0.5f;
    int iterations = 3;
    int poly_n = 7;
    float poly_sigma = 1.5f;
    int avg_win = 15;  // box window aggregating the per-pixel constraints
};

/// Weighted least-squares quadratic fit around every pixel with Gaussian
/// applicability over an n x n window, replicate border handling.
PolyExpansion poly_expand(const Image& img, int n, float sigma);

/// Coarse-to-fine dense two-frame displacement estimation.
FlowField farneback_flow(const Image& prev, const Image& next, const FlowParams& params = {});

/// Clamp (u,v) to [-max_disp, max_disp] and map affinely to [0,1]
/// (zero motion maps to 0.5).
std::pair<Image, Image> flow_to_stream(const FlowField& flow, float max_disp);

/// Inverse of flow_to_stream on the clamped range.
FlowField stream_to_flow(const Image& u01, const Image& v01, float max_disp);

// Binary flow export: "FLO1", then H and W as little-endian int32, then
// row-major interleaved (u,v) float32.
void write_flo(const std::string& path, const FlowField& flow);
FlowField read_flo(const std::string& path);

}  // namespace vad
