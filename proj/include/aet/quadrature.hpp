#pragma once

#include <array>
#include <cstddef>

namespace aet {

// Symmetric Gauss rules on the reference triangle {xi >= 0, eta >= 0,
// xi + eta <= 1}. Weights sum to 1 and are scaled by the element area.
struct QuadPoint {
    double xi, eta, w;
};

struct QuadRule {
    const QuadPoint* pts;
    int n;
};

// Degree-2 exact (3 points).
inline const QuadRule& quad_rule_deg2() {
    static constexpr std::array<QuadPoint, 3> pts{{
        {1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0},
        {2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0},
        {1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0},
    }};
    static const QuadRule rule{pts.data(), 3};
    return rule;
}

// Degree-5 exact (7 points, Radon).
inline const QuadRule& quad_rule_deg5() {
    constexpr double a1 = 0.059715871789769820;
    constexpr double b1 = 0.470142064105115090;
    constexpr double w1 = 0.132394152788506180;
    constexpr double a2 = 0.797426985353087320;
    constexpr double b2 = 0.101286507323456340;
    constexpr double w2 = 0.125939180544827150;
    static constexpr std::array<QuadPoint, 7> pts{{
        {1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0},
        {a1, b1, w1},
        {b1, a1, w1},
        {b1, b1, w1},
        {a2, b2, w2},
        {b2, a2, w2},
        {b2, b2, w2},
    }};
    static const QuadRule rule{pts.data(), 7};
    return rule;
}

}  // namespace aet
