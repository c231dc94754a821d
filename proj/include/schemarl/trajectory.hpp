#ifndef SCHEMARL_TRAJECTORY_HPP_
#define SCHEMARL_TRAJECTORY_HPP_

#include <vector>

namespace schemarl {

struct TrajectoryStep {
  std::vector<double> observation;
  int t = 0;
  int joint_index = 0;
  // Pre-clamp argument samples of the selected skills (left slice, then
  // right slice), in network units.
  std::vector<double> raw_args;
  double log_prob = 0.0;
  double value = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  // Terminal binary reward r(tau).
  double reward = 0.0;
  bool complete = false;

  bool succeeded() const { return reward > 0.0; }
};

}  // namespace schemarl

#endif  // SCHEMARL_TRAJECTORY_HPP_
