#ifndef REWARDLOOP_PROTOTYPE_HPP
#define REWARDLOOP_PROTOTYPE_HPP

#include "rewardloop/numerics.hpp"

namespace rewardloop {

/// Class mean in feature space; doubles as the cosine classifier weight of that class.
struct Prototype {
  int class_id = -1;
  FeatureVec mu;
};

}  // namespace rewardloop

#endif  // REWARDLOOP_PROTOTYPE_HPP
