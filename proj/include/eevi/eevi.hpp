// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/parallel.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/core/stats.hpp"
#include "eevi/model.hpp"
#include "eevi/models/bayes_net.hpp"
#include "eevi/models/gaussian.hpp"
#include "eevi/models/mvn.hpp"
#include "eevi/models/ssm.hpp"
#include "eevi/proposals/basic.hpp"
#include "eevi/proposals/extended.hpp"
#include "eevi/proposals/factory.hpp"
#include "eevi/proposals/smc.hpp"
#include "eevi/estimators/bounds.hpp"
#include "eevi/estimators/diagnostics.hpp"
#include "eevi/estimators/enumeration.hpp"
#include "eevi/estimators/mcmc.hpp"
#include "eevi/measures/compose.hpp"
#include "eevi/measures/pair_grid.hpp"
#include "eevi/baselines/knn.hpp"
#include "eevi/io/csv.hpp"
