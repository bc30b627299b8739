#include "vad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace vad {

double stream_mse(const Tensor& a, const Tensor& b) {
    require_shape(a.same_shape(b), "stream_mse shape mismatch: " + shape_str(a.shape) + " vs " +
                                       shape_str(b.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.numel());
}

double slice_mse(const Tensor& a, const Tensor& b, int item) {
    require_shape(a.same_shape(b), "slice_mse shape mismatch");
    const std::int64_t per = a.numel() / a.shape[0];
    const std::int64_t off = per * item;
    double acc = 0.0;
    for (std::int64_t i = 0; i < per; ++i) {
        const double d = static_cast<double>(a.data[off + i]) - b.data[off + i];
        acc += d * d;
    }
    return acc / static_cast<double>(per);
}

double clip_error(const Tensor& gray, const Tensor& flow, const Tensor& gray_hat,
                  const Tensor& flow_hat) {
    return 0.5 * (std::sqrt(stream_mse(gray, gray_hat)) + std::sqrt(stream_mse(flow, flow_hat)));
}

double clip_error(const Tensor& gray, const Tensor& gray_hat) {
    return std::sqrt(stream_mse(gray, gray_hat));
}

std::vector<double> regularity(const std::vector<double>& errors) {
    if (errors.empty()) return {};
    const auto [mn_it, mx_it] = std::minmax_element(errors.begin(), errors.end());
    const double mn = *mn_it, mx = *mx_it;
    std::vector<double> s(errors.size(), 1.0);
    if (mx > mn) {
        for (std::size_t i = 0; i < errors.size(); ++i) s[i] = 1.0 - (errors[i] - mn) / (mx - mn);
    }
    return s;
}

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_auc: scores and labels differ in length");
    std::int64_t P = 0, N = 0;
    for (int l : labels) (l ? P : N) += 1;
    if (P == 0) throw std::invalid_argument("roc_auc: no positive (anomalous) labels present");
    if (N == 0) throw std::invalid_argument("roc_auc: no negative (normal) labels present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    // Integer sweep; tied scores collapse into one threshold step, and the
    // trapezoid numerator stays exact so the AUC equals the rank statistic.
    std::int64_t tp = 0, fp = 0, num = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::int64_t dp = 0, dn = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? dp : dn) += 1;
            ++j;
        }
        num += (2 * tp + dp) * dn;
        tp += dp;
        fp += dn;
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(N),
                                static_cast<double>(tp) / static_cast<double>(P)});
        i = j;
    }
    curve.auc = static_cast<double>(num) / (2.0 * static_cast<double>(P) * static_cast<double>(N));
    return curve;
}

EvalReport evaluate(const Checkpoint& ck, const std::vector<Clip>& clips, int batch_size) {
    if (clips.empty()) throw std::invalid_argument("evaluate: no test clips");
    if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
    const NetworkSpec spec = build(ck.kind, ck.params.seed).spec;

    EvalReport report;
    report.kind = ck.kind;
    report.trace.errors.reserve(clips.size());
    const bool two_stream = kind_streams(ck.kind) == 2;

    for (std::size_t begin = 0; begin < clips.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(clips.size(), begin + static_cast<std::size_t>(batch_size));
        std::vector<int> idx(end - begin);
        std::iota(idx.begin(), idx.end(), static_cast<int>(begin));
        const ClipBatch batch = make_batch(clips, idx);
        if (ck.kind == ModelKind::SupervisedClassifier) {
            const std::vector<float> probs = classify(spec, ck.params, batch.gray);
            for (float p : probs) report.trace.errors.push_back(static_cast<double>(p));
        } else if (two_stream) {
            const auto [gray_hat, flow_hat] =
                forward_autoencoder(spec, ck.params, batch.gray, &batch.flow);
            for (int b = 0; b < static_cast<int>(idx.size()); ++b)
                report.trace.errors.push_back(
                    0.5 * (std::sqrt(slice_mse(batch.gray, gray_hat, b)) +
                           std::sqrt(slice_mse(batch.flow, flow_hat, b))));
        } else {
            const auto [gray_hat, unused] =
                forward_autoencoder(spec, ck.params, batch.gray, nullptr);
            for (int b = 0; b < static_cast<int>(idx.size()); ++b)
                report.trace.errors.push_back(std::sqrt(slice_mse(batch.gray, gray_hat, b)));
        }
        for (std::size_t c = begin; c < end; ++c) {
            report.trace.labels.push_back(clips[c].anomalous ? 1 : 0);
            report.trace.start_frames.push_back(clips[c].start_frame);
        }
    }

    report.trace.regularity = regularity(report.trace.errors);
    std::vector<double> anomaly_scores(report.trace.regularity.size());
    for (std::size_t i = 0; i < anomaly_scores.size(); ++i)
        anomaly_scores[i] = 1.0 - report.trace.regularity[i];
    report.curve = roc_auc(anomaly_scores, report.trace.labels);
    report.auc = report.curve.auc;
    return report;
}

void write_trace_csv(const std::string& path, const RegularityTrace& trace) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_trace_csv: cannot open " + path);
    f << "clip_index,start_frame,error,regularity,label\n";
    char line[160];
    for (std::size_t i = 0; i < trace.errors.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%d,%.9g,%.9g,%d\n", i, trace.start_frames[i],
                      trace.errors[i], trace.regularity[i], trace.labels[i]);
        f << line;
    }
    if (!f) throw std::runtime_error("write_trace_csv: short write to " + path);
}

void write_regularity_svg(const std::string& path, const RegularityTrace& trace) {
    const int W = 880, H = 260, mx = 40, my = 20;
    const int plot_w = W - 2 * mx, plot_h = H - 2 * my;
    const std::size_t n = trace.regularity.size();
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_regularity_svg: cannot open " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    const auto xpos = [&](std::size_t i) {
        return mx + (n <= 1 ? 0.0
                            : static_cast<double>(i) * plot_w / static_cast<double>(n - 1));
    };
    // shade ground-truth anomalous spans
    std::size_t i = 0;
    while (i < n) {
        if (trace.labels[i]) {
            std::size_t j = i;
            while (j < n && trace.labels[j]) ++j;
            f << "<rect x=\"" << xpos(i) << "\" y=\"" << my << "\" width=\""
              << std::max(1.0, xpos(j - 1) - xpos(i)) << "\" height=\"" << plot_h
              << "\" fill=\"#f4c7c3\"/>\n";
            i = j;
        } else {
            ++i;
        }
    }
    f << "<polyline fill=\"none\" stroke=\"#3367d6\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < n; ++k)
        f << xpos(k) << "," << my + (1.0 - trace.regularity[k]) * plot_h << " ";
    f << "\"/>\n";
    f << "<line x1=\"" << mx << "\" y1=\"" << my + plot_h << "\" x2=\"" << W - mx << "\" y2=\""
      << my + plot_h << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << mx << "\" y=\"" << H - 4 << "\" font-size=\"11\">clip index</text>\n";
    f << "<text x=\"4\" y=\"" << my + 8 << "\" font-size=\"11\">regularity</text>\n";
    f << "</svg>\n";
    if (!f) throw std::runtime_error("write_regularity_svg: short write to " + path);
}

}  // namespace vad
