#pragma once

#include <span>
#include <vector>

namespace dqs {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation. Zero when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. Throws std::invalid_argument for
/// mismatched lengths or fewer than two points.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace dqs
