#pragma once

#include <string>

#include "rlk/momentum_grid.hpp"

namespace rlk {

// "RLKSNAP1", dims (Nx, N, N, N) as int64 LE, then float64 LE values.
void write_snapshot(const std::string& path, const DistributionField& f, std::size_t n);
DistributionField read_snapshot(const std::string& path, std::size_t* n_out = nullptr);

}  // namespace rlk
