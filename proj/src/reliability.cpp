#include "tvws/reliability.hpp"

#include <algorithm>
#include <cmath>

namespace tvws {

double compute_reliability(const std::vector<EvidenceWeight>& conforming,
                           const std::vector<EvidenceWeight>& conflicting, double gamma) {
    auto weight = [](const EvidenceWeight& e) {
        return std::clamp(e.confidence, 0.0, 1.0) * std::clamp(e.trust, 0.0, 1.0);
    };

    double miss_all = 1.0;
    double w_conform = 0.0;
    for (const EvidenceWeight& e : conforming) {
        const double w = weight(e);
        miss_all *= 1.0 - w;
        w_conform += w;
    }
    double w_conflict = 0.0;
    for (const EvidenceWeight& e : conflicting) w_conflict += weight(e);

    const double support = 1.0 - miss_all;
    const double total = w_conform + w_conflict;
    const double penalty = total > 0.0 ? 1.0 - gamma * (w_conflict / total) : 1.0;
    return std::clamp(support * penalty, 0.0, 1.0);
}

} // namespace tvws
