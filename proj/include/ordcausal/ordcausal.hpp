#pragma once

#include "ordcausal/core.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/gss.hpp"
#include "ordcausal/io.hpp"
#include "ordcausal/monotone.hpp"
#include "ordcausal/probit.hpp"
#include "ordcausal/randomization.hpp"
#include "ordcausal/rng.hpp"
#include "ordcausal/truncnorm.hpp"
