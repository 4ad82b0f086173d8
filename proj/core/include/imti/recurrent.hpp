#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "imti/tensor.hpp"

namespace imti {

enum class ForgetMode { exponential, sigmoid };

const char* forget_mode_name(ForgetMode m);
ForgetMode parse_forget_mode(const std::string& s);

// Gate preactivations for one step, each of size hidden.
struct GatePre {
  std::vector<double> z, i, f, o;
};

// Weights for one direction, viewing storage owned elsewhere. Row-major
// w_* are [hidden x input], r_* are [hidden x hidden], b_* are [hidden].
// The gate order is z (cell candidate), i, f, o; the LSTM baseline reuses
// the same layout with the candidate gate in the z slot.
struct RecurrentParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  const double* w[4] = {};
  const double* r[4] = {};
  const double* b[4] = {};
};

struct RecurrentGrads {
  double* w[4] = {};
  double* r[4] = {};
  double* b[4] = {};
};

GatePre gate_preactivations(const double* x, const double* h_prev, const RecurrentParams& p);

// --- sLSTM ---------------------------------------------------------------

// Literal update: i = exp(i~), f = exp(f~) or sigmoid(f~), c' = f c + i z,
// n' = f n + i, h = o c'/n'. Overflows for large preactivations; throws
// instead of returning non-finite state.
struct SlstmNaiveState {
  std::vector<double> c, n, h;
  explicit SlstmNaiveState(std::size_t hidden) : c(hidden), n(hidden), h(hidden) {}
};

void slstm_step_naive(const GatePre& pre, ForgetMode mode, SlstmNaiveState& s);

// Log-domain form. Gates are rescaled by exp(-m') with
// m' = max(log f + m, i~), which leaves c'/n' exactly equal to the naive
// ratio while keeping every stored quantity in a safe range: i', f' <= 1
// and n >= 1 from the first step on. A unit with n == 0 is in its initial
// state and takes the m' = i~ branch, which zeroes the (empty) carry terms.
struct SlstmState {
  std::vector<double> c, n, m, h;
  explicit SlstmState(std::size_t hidden) : c(hidden), n(hidden), m(hidden), h(hidden) {}
};

// Per-step byproducts needed by the backward pass.
struct SlstmStepCache {
  std::vector<double> z, o, ip, fp, sig_f;
};

void slstm_step_stabilized(const GatePre& pre, ForgetMode mode, SlstmState& s,
                           SlstmStepCache* cache = nullptr);

struct SlstmParams {
  RecurrentParams rec;
  ForgetMode forget_mode = ForgetMode::exponential;
};

void slstm_step_naive(const double* x, const SlstmParams& p, SlstmNaiveState& s);
void slstm_step_stabilized(const double* x, const SlstmParams& p, SlstmState& s);

struct SlstmSequenceCache {
  Matrix x;                      // [T x I]
  Matrix h;                      // [T x H]
  Matrix z, o, ip, fp, sig_f;    // per-step gate values
  Matrix c, n;                   // post-step state
};

// Runs from a zero initial state; returns hidden states [T x H].
Matrix slstm_forward(const Matrix& x, const SlstmParams& p, SlstmSequenceCache* cache = nullptr);

// Gradient of sum_t <upstream_t, h_t>. Parameter gradients accumulate into
// g; the return value is d/dx. The stabilizer m is a pure reparametrization
// (h is invariant to it), so it is treated as constant.
Matrix slstm_backward(const SlstmParams& p, const SlstmSequenceCache& cache,
                      const Matrix& upstream, const RecurrentGrads& g);

// --- LSTM baseline --------------------------------------------------------

struct LstmState {
  std::vector<double> c, h;
  explicit LstmState(std::size_t hidden) : c(hidden), h(hidden) {}
};

void lstm_step(const GatePre& pre, LstmState& s);

struct LstmSequenceCache {
  Matrix x;
  Matrix h;
  Matrix g, i, f, o;  // post-nonlinearity gate values
  Matrix c, tanh_c;
};

Matrix lstm_forward(const Matrix& x, const RecurrentParams& p, LstmSequenceCache* cache = nullptr);

Matrix lstm_backward(const RecurrentParams& p, const LstmSequenceCache& cache,
                     const Matrix& upstream, const RecurrentGrads& g);

// --- bidirectional wrapper -------------------------------------------------

// Concatenates a forward pass with a time-reversed pass: columns [0, H) are
// fwd(x), columns [H, 2H) are reverse(bwd(reverse(x))).
struct BiSlstmCache {
  SlstmSequenceCache fwd, bwd;
};
struct BiLstmCache {
  LstmSequenceCache fwd, bwd;
};

Matrix bidirectional_slstm_forward(const Matrix& x, const SlstmParams& fwd, const SlstmParams& bwd,
                                   BiSlstmCache* cache = nullptr);
Matrix bidirectional_slstm_backward(const SlstmParams& fwd, const SlstmParams& bwd,
                                    const BiSlstmCache& cache, const Matrix& upstream,
                                    const RecurrentGrads& gf, const RecurrentGrads& gb);

Matrix bidirectional_lstm_forward(const Matrix& x, const RecurrentParams& fwd, const RecurrentParams& bwd,
                                  BiLstmCache* cache = nullptr);
Matrix bidirectional_lstm_backward(const RecurrentParams& fwd, const RecurrentParams& bwd,
                                   const BiLstmCache& cache, const Matrix& upstream,
                                   const RecurrentGrads& gf, const RecurrentGrads& gb);

}  // namespace imti
