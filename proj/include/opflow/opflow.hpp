#pragma once

#include "opflow/types.hpp"
#include "opflow/manifold.hpp"
#include "opflow/lda.hpp"
#include "opflow/models.hpp"
#include "opflow/flow.hpp"
#include "opflow/baselines.hpp"
#include "opflow/trace_io.hpp"
#include "opflow/config.hpp"
