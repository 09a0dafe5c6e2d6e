#pragma once

#include <vector>

namespace tvws {

struct EvidenceWeight {
    double confidence = 0.0; // [0, 1]
    double trust = 0.0;      // [0, 1]
};

// Fuses weighted agreeing evidence and discounts by the conflicting share:
//   r = (1 - prod(1 - c_i * t_i)) * (1 - gamma * W_conflict / (W_conflict + W_conform))
// with W = sum of c_i * t_i per side. No conforming evidence yields 0; the
// result is clamped to [0, 1].
double compute_reliability(const std::vector<EvidenceWeight>& conforming,
                           const std::vector<EvidenceWeight>& conflicting, double gamma = 1.0);

} // namespace tvws
