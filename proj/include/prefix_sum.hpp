#pragma once

#include "prefix_sum/algorithm.hpp"
#include "prefix_sum/barrier.hpp"
#include "prefix_sum/engine.hpp"
#include "prefix_sum/plan.hpp"
#include "prefix_sum/platform.hpp"
#include "prefix_sum/scan_core.hpp"
#include "prefix_sum/simd.hpp"
#include "prefix_sum/simd_kernels.hpp"
