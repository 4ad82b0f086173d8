#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "imti/tensor.hpp"

namespace imti {

// Indices that subsample a stream of t_long frames down to t_short by
// nearest-neighbor position: i -> round(i * (t_long - 1) / (t_short - 1)).
// Strictly increasing; first index is 0 and last is t_long - 1. t_short == 1
// selects index 0. Requires 1 <= t_short <= t_long.
std::vector<std::size_t> align_indices(std::size_t t_short, std::size_t t_long);

// Subsample the longer of the two sequences so both end up with
// min(rows(a), rows(b)) rows. Selected rows are copied verbatim.
std::pair<Matrix, Matrix> align_frames(const Matrix& a, const Matrix& b);

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& idx);

}  // namespace imti
