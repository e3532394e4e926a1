#pragma once

#include "srqr/cc_distance.hpp"
#include "srqr/core.hpp"
#include "srqr/experiment.hpp"
#include "srqr/geodesics.hpp"
#include "srqr/heisenberg.hpp"
#include "srqr/lens.hpp"
#include "srqr/path.hpp"
#include "srqr/quaternion.hpp"
#include "srqr/sphere.hpp"
