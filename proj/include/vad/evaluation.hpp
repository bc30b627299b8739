#pragma once

#include <string>
#include <vector>

#include "vad/models.hpp"
#include "vad/preprocessing.hpp"

namespace vad {

/// Per-clip reconstruction errors with normalized regularity scores.
/// s(i) = 1 - (e(i) - min e) / (max e - min e); all-equal errors give s = 1.
struct RegularityTrace {
    std::vector<double> errors;
    std::vector<double> regularity;
    std::vector<int> labels;  // 1 = anomalous ground truth
    std::vector<int> start_frames;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) .. (1,1), monotone in both axes
    double auc = 0.0;
};

/// Mean squared difference, double accumulation.
double stream_mse(const Tensor& a, const Tensor& b);
/// Same, over item `b` of two batched tensors (axis 0).
double slice_mse(const Tensor& a, const Tensor& bten, int item);

/// e = (sqrt(mse_gray) + sqrt(mse_flow)) / 2
double clip_error(const Tensor& gray, const Tensor& flow, const Tensor& gray_hat,
                  const Tensor& flow_hat);
/// single-stream variant: e = sqrt(mse_gray)
double clip_error(const Tensor& gray, const Tensor& gray_hat);

std::vector<double> regularity(const std::vector<double>& errors);

/// Threshold sweep over unique scores (ties grouped), trapezoidal AUC.
/// Requires at least one positive and one negative label.
RocCurve roc_auc(const std::vector<double>& anomaly_scores, const std::vector<int>& labels);

struct EvalReport {
    ModelKind kind = ModelKind::TwoStreamCAE2D;
    RegularityTrace trace;
    RocCurve curve;
    double auc = 0.0;
};

/// Scores every clip with the checkpointed model and runs the ROC analysis.
/// Autoencoder kinds score by reconstruction error, the supervised kind by
/// its predicted probability.
EvalReport evaluate(const Checkpoint& ck, const std::vector<Clip>& test_clips, int batch_size = 32);

void write_trace_csv(const std::string& path, const RegularityTrace& trace);
void write_regularity_svg(const std::string& path, const RegularityTrace& trace);

}  // namespace vad
