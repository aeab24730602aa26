#pragma once

#include <iosfwd>
#include <string>

#include "seqal/costing.hpp"
#include "seqal/types.hpp"

namespace seqal::cli {

// Entry point of the command-line tool. Returns the process exit code:
// 0 success, 1 runtime failure, 2 configuration or usage error, 3 invalid data.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// round,cost_lower_h,cost_upper_h,overhead_lower_gflops,overhead_upper_gflops over the train split.
std::string bounds_csv(const PoolState& pool, std::size_t rounds, const cost::OverheadModel& model = {});

// variable,n,pearson,spearman,kendall_tau_b of cost_hours against sequence
// statistics over every sequence in the pool. Flow-based rows are blank when
// the pool carries no flow statistics.
std::string analyze_csv(const PoolState& pool);

}  // namespace seqal::cli
