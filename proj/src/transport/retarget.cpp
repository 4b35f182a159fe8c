#include "hapcompass/transport/retarget.hpp"

#include "hapcompass/sim/contact_sim.hpp"

namespace hapcompass::transport {

Position3 retarget(const HandPoseMsg& pose, RetargetState& state) {
  pose.validate();
  Position3 action;
  if (state.previous) action = sim::clamp_step((pose.position - *state.previous) * state.scale, state.max_step);
  state.previous = pose.position;
  return action;
}

}  // namespace hapcompass::transport
