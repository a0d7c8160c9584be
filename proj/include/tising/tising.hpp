#pragma once

#include "tising/common.hpp"
#include "tising/covariate_mple.hpp"
#include "tising/cw_exact.hpp"
#include "tising/io.hpp"
#include "tising/mc_harness.hpp"
#include "tising/model_zoo.hpp"
#include "tising/tensor_core.hpp"
