#pragma once

#include "regsyn/types.hpp"

namespace regsyn {

// State feedback K with A + BK Hurwitz, K = -inv(R) B' P from the Riccati
// solution with weights Q (default I) and R (default I).
Mat lqr_gain(const Mat& a, const Mat& b, const Mat* q = nullptr,
             const Mat* r = nullptr);

// Output injection L with A + LC Hurwitz, via duality.
Mat output_injection_gain(const Mat& a, const Mat& c, const Mat* q = nullptr,
                          const Mat* r = nullptr);

}  // namespace regsyn
