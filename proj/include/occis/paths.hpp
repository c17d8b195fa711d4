#pragma once

#include "occis/model.hpp"
#include "occis/rng.hpp"

namespace occis {

/// Euler-Maruyama path of (X, Z) with occupation accumulated from the left
/// endpoint of each step. A null control gives the plain dynamics with
/// likelihood 1; otherwise the drift is shifted by b*zeta and the Girsanov
/// likelihood is accumulated in log-space.
/// Throws NonFiniteState if the state leaves the finite range.
PathResult simulate_path(const SdeModel& model, const OccupationProblem& prob,
                         const DiscretizationLevel& level,
                         const ControlFn* control, GaussianStream& stream);

/// Fine/coarse pair coupled before the change of measure: both resolutions
/// share the Brownian increments (coarse = pairwise sums) but apply their own
/// control shift and carry their own likelihood. The fine level must have an
/// even number of steps.
CoupledPairResult simulate_coupled_pair_sll(const SdeModel& model,
                                            const OccupationProblem& prob,
                                            const DiscretizationLevel& fine_level,
                                            const ControlFn* control,
                                            GaussianStream& stream);

/// Fine/coarse pair coupled after the change of measure: the coarse path is
/// driven by pairwise sums of the shifted fine increments (equivalently, the
/// averaged fine control), and both payoffs carry the fine likelihood.
CoupledPairResult simulate_coupled_pair_cl(const SdeModel& model,
                                           const OccupationProblem& prob,
                                           const DiscretizationLevel& fine_level,
                                           const ControlFn* control,
                                           GaussianStream& stream);

}  // namespace occis
