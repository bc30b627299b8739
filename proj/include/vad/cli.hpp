#pragma once

namespace vad::cli {

// Exit codes: 0 success, 1 generic failure, 2 config field out of range,
// 3 checkpoint/model-kind mismatch, 4 degenerate evaluation labels.
int run(int argc, const char* const* argv);

}  // namespace vad::cli
