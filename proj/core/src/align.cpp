#include "imti/align.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

std::vector<std::size_t> align_indices(std::size_t t_short, std::size_t t_long) {
  if (t_short == 0) throw ValidationError("align_indices: empty target");
  if (t_short > t_long)
    throw ValidationError(strf("align_indices: target %zu longer than source %zu", t_short, t_long));
  std::vector<std::size_t> idx(t_short);
  if (t_short == 1) return idx;  // {0}
  const double ratio = static_cast<double>(t_long - 1) / static_cast<double>(t_short - 1);
  for (std::size_t i = 0; i < t_short; ++i)
    idx[i] = static_cast<std::size_t>(std::llround(static_cast<double>(i) * ratio));
  return idx;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= m.rows()) throw ValidationError("select_rows: index out of range");
    const double* src = m.row(idx[i]);
    double* dst = out.row(i);
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = src[c];
  }
  return out;
}

std::pair<Matrix, Matrix> align_frames(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw ValidationError("align_frames: empty sequence");
  if (a.rows() == b.rows()) return {a, b};
  if (a.rows() > b.rows()) return {select_rows(a, align_indices(b.rows(), a.rows())), b};
  return {a, select_rows(b, align_indices(a.rows(), b.rows()))};
}

}  // namespace imti
