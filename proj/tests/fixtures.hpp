#pragma once

// Shared plant fixtures for the test suites: a three-state plant with two
// scalar uncertainty blocks, used throughout with unit cost weights, under
// state feedback (measurement A) and under a four-output measurement with a
// disturbance feed-through (measurement B).

#include "gcs/model.hpp"

namespace gcs::testing {

inline Mat plant_a() {
    return Mat{{1.1, 0.0, 0.0}, {0.0, 0.0, 1.2}, {-1.0, 1.0, 0.0}};
}
inline Mat plant_bu() {
    return Mat{{0.0, 1.0}, {1.0, 1.0}, {-1.0, 0.0}};
}
inline Mat plant_bw() {
    return Mat{{0.7, 0.3}, {0.5, -0.4}, {-1.0, 0.0}};
}
inline Mat plant_cz() {
    return Mat{{0.41, 0.43, -0.5}, {0.0, -0.32, 0.44}};
}
inline Mat plant_dzu() {
    return Mat{{0.4, -0.4}, {0.0, 0.0}};
}

inline std::vector<UncertaintyBlock> two_scalar_blocks() {
    return {UncertaintyBlock{1, 1, 1}, UncertaintyBlock{1, 1, 1}};
}

/// State-feedback measurement: C_y = I, D_y^w = 0.
inline UncertainSystem example_state_feedback() {
    return UncertainSystem(plant_a(), plant_bu(), Mat::identity(3), plant_bw(), Mat::zeros(3, 2), plant_cz(),
                           plant_dzu(), Mat::zeros(2, 2), two_scalar_blocks());
}

/// Output-feedback measurement with disturbance feed-through on the fourth
/// output: C_y = [I; 0], D_y^w = [0; e_2'].
inline UncertainSystem example_output_feedback() {
    const Mat cy{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 0.0}};
    const Mat dyw{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}};
    return UncertainSystem(plant_a(), plant_bu(), cy, plant_bw(), dyw, plant_cz(), plant_dzu(), Mat::zeros(2, 2),
                           two_scalar_blocks());
}

/// Same plant with every uncertainty channel zeroed (structure retained).
inline UncertainSystem example_zero_channels() {
    return UncertainSystem(plant_a(), plant_bu(), Mat::identity(3), Mat::zeros(3, 2), Mat::zeros(3, 2),
                           Mat::zeros(2, 3), Mat::zeros(2, 2), Mat::zeros(2, 2), two_scalar_blocks());
}

inline CostFunctional unit_cost() {
    return CostFunctional(SymMat::identity(3), Mat::zeros(3, 2), SymMat::identity(2));
}

}  // namespace gcs::testing
