#pragma once

#include <array>
#include <utility>

#include "vad/tape.hpp"

namespace vad {

enum class Padding { Same, Valid };

struct Conv2dOpts {
    std::pair<int, int> stride{1, 1};
    std::pair<int, int> dilation{1, 1};
    Padding padding = Padding::Same;
};

struct Conv3dOpts {
    std::array<int, 3> stride{1, 1, 1};
    Padding padding = Padding::Same;
};

// Cross-correlation convolutions, channels-last layout.
// conv2d: input (B,H,W,Cin) * kernel (kh,kw,Cin,Cout) -> (B,H',W',Cout)
// conv3d: input (B,T,H,W,Cin) * kernel (kt,kh,kw,Cin,Cout) -> (B,T',H',W',Cout)
// Same padding is symmetric with the extra cell at the trailing edge.
NodeId conv2d(Tape& t, NodeId input, NodeId kernel, const Conv2dOpts& opts = {});
NodeId conv3d(Tape& t, NodeId input, NodeId kernel, const Conv3dOpts& opts = {});

// Adjoint of conv2d under the same geometry: maps (B,H',W',Cout) back to
// (B,out_h,out_w,Cin), where conv2d on (out_h,out_w) would have produced
// the input's spatial dims.
NodeId conv_transpose2d(Tape& t, NodeId input, NodeId kernel, const Conv2dOpts& opts,
                        std::pair<int, int> out_hw);

NodeId upsample_nearest2d(Tape& t, NodeId input, int factor);
NodeId upsample_nearest3d(Tape& t, NodeId input, int ft, int fh, int fw);

NodeId leaky_relu(Tape& t, NodeId input, float slope);
NodeId sigmoid(Tape& t, NodeId input);

NodeId add(Tape& t, NodeId a, NodeId b);
NodeId bias_add(Tape& t, NodeId x, NodeId bias);
NodeId concat_channels(Tape& t, NodeId a, NodeId b);
NodeId reshape(Tape& t, NodeId x, std::vector<int> new_shape);

// dense: x (B,F) * w (F,O) -> (B,O)
NodeId dense(Tape& t, NodeId x, NodeId w);
// mean over all non-batch, non-channel axes: (B,...,C) -> (B,C)
NodeId global_avg_pool(Tape& t, NodeId x);

// Scalar-producing reductions.
NodeId mse(Tape& t, NodeId x, NodeId xhat);
NodeId bce(Tape& t, NodeId prob, NodeId target);
// Inner product with a fixed tensor; the generic scalar head for gradient checks.
NodeId proj(Tape& t, NodeId x, Tensor weights);

NodeId scale(Tape& t, NodeId x, float c);

// Shape arithmetic shared with model construction.
struct AxisGeom {
    int in = 0, k = 1, stride = 1, dil = 1, pad = 0, out = 0;
};
AxisGeom conv_axis_geom(int in, int k, int stride, int dil, Padding p);

}  // namespace vad
