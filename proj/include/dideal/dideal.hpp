#pragma once

/**
 * @file dideal.hpp
 * @brief Umbrella header.
 */

#include "dideal/ambient.hpp"
#include "dideal/blocks.hpp"
#include "dideal/companions.hpp"
#include "dideal/curvature.hpp"
#include "dideal/delta.hpp"
#include "dideal/families.hpp"
#include "dideal/ideal.hpp"
#include "dideal/jets.hpp"
#include "dideal/pipeline.hpp"
#include "dideal/profiles.hpp"
#include "dideal/scenario.hpp"
#include "dideal/shape.hpp"
#include "dideal/warp.hpp"
