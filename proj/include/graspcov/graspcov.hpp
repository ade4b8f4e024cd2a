#pragma once

#include "graspcov/core/error.hpp"
#include "graspcov/core/random.hpp"
#include "graspcov/core/types.hpp"
#include "graspcov/gripper/gripper.hpp"
#include "graspcov/mesh/bvh.hpp"
#include "graspcov/mesh/io.hpp"
#include "graspcov/mesh/shapes.hpp"
#include "graspcov/mesh/trimesh.hpp"
#include "graspcov/metrics/coverage.hpp"
#include "graspcov/metrics/pose_index.hpp"
#include "graspcov/oracle/oracle.hpp"
#include "graspcov/samplers/samplers.hpp"
#include "graspcov/se3/farthest.hpp"
#include "graspcov/se3/grid.hpp"
#include "graspcov/se3/pose.hpp"
#include "graspcov/se3/sampling.hpp"
