// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/measures/compose.hpp"
#include "eevi/models/ssm.hpp"

namespace eevi {

struct PairCell {
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  MeasureEstimate estimate;  // I(target : (y@t1, y@t2))
};

struct PairGrid {
  std::vector<PairCell> cells;  // t1 < t2, row-major
  std::size_t argmax = 0;       // index into cells, by midpoint
};

// Information about `target` carried by each pair of observations
// (y@t1, y@t2), 1 <= t1 < t2 <= horizon. The model's input schedule is fixed
// exogenously.
inline PairGrid ssm_measurement_pair_grid(const LinearGaussianSsm& model,
                                          const AddressSet& target,
                                          const ProposalFactory& factory,
                                          const EstimatorConfig& cfg,
                                          SharingMode sharing = SharingMode::shared_outer) {
  const auto h = model.horizon();
  require(h >= 2, ErrorCode::invalid_argument,
          "pair grid needs a horizon of at least 2");
  PairGrid grid;
  for (std::size_t t1 = 1; t1 <= h; ++t1)
    for (std::size_t t2 = t1 + 1; t2 <= h; ++t2) {
      const AddressSet ys{Address("y", static_cast<int>(t1)), Address("y", static_cast<int>(t2))};
      grid.cells.push_back({t1, t2, cmi_interval(model, target, ys, {}, factory, cfg, sharing)});
    }
  for (std::size_t c = 1; c < grid.cells.size(); ++c)
    if (grid.cells[c].estimate.interval.midpoint() >
        grid.cells[grid.argmax].estimate.interval.midpoint())
      grid.argmax = c;
  return grid;
}

}  // namespace eevi
