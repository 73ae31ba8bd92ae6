#pragma once

#include <span>

#include "scenerouter/experts.hpp"
#include "scenerouter/trajdata.hpp"

namespace scenerouter {

// Mean Euclidean displacement over the horizon of one agent.
double segment_ade(const Path& predicted, const Path& truth);
// Euclidean displacement at the last horizon step.
double segment_fde(const Path& predicted, const Path& truth);

// Mean over agents and horizon steps; predictions are matched to segments
// by position and must agree on agent ids and lengths (LengthMismatch).
double ade(std::span<const Prediction> predictions, std::span<const TrajectorySegment> truth);
// Mean over agents of the final-step displacement.
double fde(std::span<const Prediction> predictions, std::span<const TrajectorySegment> truth);

}  // namespace scenerouter
