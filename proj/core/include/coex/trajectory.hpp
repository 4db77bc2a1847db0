#pragma once

#include <vector>

namespace coex {

struct TabStep {
    int state = 0;
    int action = 0;
    double reward = 0.0;
};

struct TabTrajectory {
    std::vector<TabStep> steps;
    int final_state = 0;  // landing state of the last transition
    double total_return = 0.0;
};

struct McStep {
    double position = 0.0;
    double velocity = 0.0;
    double action = 0.0;
    double reward = 0.0;
};

struct McTrajectory {
    std::vector<McStep> steps;
    double total_return = 0.0;
};

}  // namespace coex
