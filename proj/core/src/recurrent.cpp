#include "imti/recurrent.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

namespace {

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// log(sigmoid(x)) = -softplus(-x), safe for any finite x.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

void matvec_acc(const double* w, std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    out[r] += s;
  }
}

// out_vec += w^T g, i.e. out[c] += sum_r w[r][c] g[r]
void matvec_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* g, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
  }
}

void outer_acc(double* w, std::size_t rows, std::size_t cols, const double* g, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void copy_row(Matrix& dst, std::size_t r, const std::vector<double>& src) {
  double* row = dst.row(r);
  for (std::size_t i = 0; i < src.size(); ++i) row[i] = src[i];
}

}  // namespace

const char* forget_mode_name(ForgetMode m) {
  return m == ForgetMode::exponential ? "exponential" : "sigmoid";
}

ForgetMode parse_forget_mode(const std::string& s) {
  if (s == "exponential") return ForgetMode::exponential;
  if (s == "sigmoid") return ForgetMode::sigmoid;
  throw ValidationError("unknown forget_mode \"" + s + "\" (expected exponential or sigmoid)");
}

GatePre gate_preactivations(const double* x, const double* h_prev, const RecurrentParams& p) {
  GatePre pre;
  std::vector<double>* gates[4] = {&pre.z, &pre.i, &pre.f, &pre.o};
  for (int g = 0; g < 4; ++g) {
    std::vector<double>& v = *gates[g];
    v.assign(p.b[g], p.b[g] + p.hidden);
    matvec_acc(p.w[g], p.hidden, p.input, x, v.data());
    if (h_prev) matvec_acc(p.r[g], p.hidden, p.hidden, h_prev, v.data());
  }
  return pre;
}

void slstm_step_naive(const GatePre& pre, ForgetMode mode, SlstmNaiveState& s) {
  const std::size_t h_dim = s.c.size();
  for (std::size_t j = 0; j < h_dim; ++j) {
    const double z = std::tanh(pre.z[j]);
    const double i = std::exp(pre.i[j]);
    const double f = mode == ForgetMode::exponential ? std::exp(pre.f[j]) : sigmoid(pre.f[j]);
    const double o = sigmoid(pre.o[j]);
    const double c = f * s.c[j] + i * z;
    const double n = f * s.n[j] + i;
    if (!std::isfinite(c) || !std::isfinite(n))
      throw ValidationError(strf("naive slstm step overflowed at unit %zu (i~=%g, f~=%g)", j, pre.i[j], pre.f[j]));
    s.c[j] = c;
    s.n[j] = n;
    s.h[j] = o * c / n;
  }
}

void slstm_step_stabilized(const GatePre& pre, ForgetMode mode, SlstmState& s, SlstmStepCache* cache) {
  const std::size_t h_dim = s.c.size();
  if (cache) {
    cache->z.resize(h_dim);
    cache->o.resize(h_dim);
    cache->ip.resize(h_dim);
    cache->fp.resize(h_dim);
    cache->sig_f.resize(h_dim);
  }
  for (std::size_t j = 0; j < h_dim; ++j) {
    const double z = std::tanh(pre.z[j]);
    const double o = sigmoid(pre.o[j]);
    const double sig_f = sigmoid(pre.f[j]);
    const double log_f = mode == ForgetMode::exponential ? pre.f[j] : log_sigmoid(pre.f[j]);

    double m_new, ip, fp;
    if (s.n[j] == 0.0) {
      // initial state: the forget path carries nothing, so only the
      // stabilizer choice m' = i~ matters; i' lands exactly on 1
      m_new = pre.i[j];
      ip = 1.0;
      fp = 0.0;
    } else {
      m_new = std::max(log_f + s.m[j], pre.i[j]);
      ip = std::exp(pre.i[j] - m_new);
      fp = std::exp(log_f + s.m[j] - m_new);
    }

    s.c[j] = fp * s.c[j] + ip * z;
    s.n[j] = fp * s.n[j] + ip;
    s.m[j] = m_new;
    s.h[j] = o * s.c[j] / s.n[j];

    if (cache) {
      cache->z[j] = z;
      cache->o[j] = o;
      cache->ip[j] = ip;
      cache->fp[j] = fp;
      cache->sig_f[j] = sig_f;
    }
  }
}

void slstm_step_naive(const double* x, const SlstmParams& p, SlstmNaiveState& s) {
  const GatePre pre = gate_preactivations(x, s.h.data(), p.rec);
  slstm_step_naive(pre, p.forget_mode, s);
}

void slstm_step_stabilized(const double* x, const SlstmParams& p, SlstmState& s) {
  const GatePre pre = gate_preactivations(x, s.h.data(), p.rec);
  slstm_step_stabilized(pre, p.forget_mode, s);
}

Matrix slstm_forward(const Matrix& x, const SlstmParams& p, SlstmSequenceCache* cache) {
  if (x.cols() != p.rec.input)
    throw ValidationError(strf("slstm_forward: input width %zu, weights expect %zu", x.cols(), p.rec.input));
  const std::size_t t_len = x.rows();
  const std::size_t h_dim = p.rec.hidden;

  Matrix h_out(t_len, h_dim);
  if (cache) {
    cache->x = x;
    for (Matrix* m : {&cache->z, &cache->o, &cache->ip, &cache->fp, &cache->sig_f, &cache->c, &cache->n})
      *m = Matrix(t_len, h_dim);
  }

  SlstmState s(h_dim);
  SlstmStepCache step;
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* h_prev = t == 0 ? nullptr : h_out.row(t - 1);
    const GatePre pre = gate_preactivations(x.row(t), h_prev, p.rec);
    slstm_step_stabilized(pre, p.forget_mode, s, cache ? &step : nullptr);
    copy_row(h_out, t, s.h);
    if (cache) {
      copy_row(cache->z, t, step.z);
      copy_row(cache->o, t, step.o);
      copy_row(cache->ip, t, step.ip);
      copy_row(cache->fp, t, step.fp);
      copy_row(cache->sig_f, t, step.sig_f);
      copy_row(cache->c, t, s.c);
      copy_row(cache->n, t, s.n);
    }
  }
  if (cache) cache->h = h_out;
  return h_out;
}

Matrix slstm_backward(const SlstmParams& p, const SlstmSequenceCache& cache,
                      const Matrix& upstream, const RecurrentGrads& g) {
  const std::size_t t_len = cache.x.rows();
  const std::size_t h_dim = p.rec.hidden;
  const std::size_t in_dim = p.rec.input;
  if (upstream.rows() != t_len || upstream.cols() != h_dim)
    throw ValidationError("slstm_backward: upstream shape mismatch");

  Matrix dx(t_len, in_dim);
  std::vector<double> dh_rec(h_dim, 0.0), dc(h_dim, 0.0), dn(h_dim, 0.0);
  std::vector<double> dz_pre(h_dim), di_pre(h_dim), df_pre(h_dim), do_pre(h_dim);

  for (std::size_t tt = t_len; tt-- > 0;) {
    for (std::size_t j = 0; j < h_dim; ++j) {
      const double dh = upstream(tt, j) + dh_rec[j];
      const double c = cache.c(tt, j), n = cache.n(tt, j);
      const double z = cache.z(tt, j), o = cache.o(tt, j);
      const double ip = cache.ip(tt, j), fp = cache.fp(tt, j);
      const double htil = c / n;

      do_pre[j] = dh * htil * o * (1.0 - o);
      const double gc = dc[j] + dh * o / n;
      const double gn = dn[j] - dh * o * c / (n * n);

      dz_pre[j] = gc * ip * (1.0 - z * z);
      const double dip = gc * z + gn;
      di_pre[j] = dip * ip;

      const double c_prev = tt > 0 ? cache.c(tt - 1, j) : 0.0;
      const double n_prev = tt > 0 ? cache.n(tt - 1, j) : 0.0;
      const double dfp = gc * c_prev + gn * n_prev;
      double df = dfp * fp;  // d/d log_f
      if (p.forget_mode == ForgetMode::sigmoid) df *= 1.0 - cache.sig_f(tt, j);
      df_pre[j] = df;

      dc[j] = gc * fp;
      dn[j] = gn * fp;
    }

    const double* x_row = cache.x.row(tt);
    const double* h_prev = tt > 0 ? cache.h.row(tt - 1) : nullptr;
    const double* gates[4] = {dz_pre.data(), di_pre.data(), df_pre.data(), do_pre.data()};
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    for (int gi = 0; gi < 4; ++gi) {
      outer_acc(g.w[gi], h_dim, in_dim, gates[gi], x_row);
      for (std::size_t j = 0; j < h_dim; ++j) g.b[gi][j] += gates[gi][j];
      matvec_t_acc(p.rec.w[gi], h_dim, in_dim, gates[gi], dx.row(tt));
      if (h_prev) {
        outer_acc(g.r[gi], h_dim, h_dim, gates[gi], h_prev);
        matvec_t_acc(p.rec.r[gi], h_dim, h_dim, gates[gi], dh_rec.data());
      }
    }
  }
  return dx;
}

void lstm_step(const GatePre& pre, LstmState& s) {
  const std::size_t h_dim = s.c.size();
  for (std::size_t j = 0; j < h_dim; ++j) {
    const double gv = std::tanh(pre.z[j]);
    const double iv = sigmoid(pre.i[j]);
    const double fv = sigmoid(pre.f[j]);
    const double ov = sigmoid(pre.o[j]);
    s.c[j] = fv * s.c[j] + iv * gv;
    s.h[j] = ov * std::tanh(s.c[j]);
  }
}

Matrix lstm_forward(const Matrix& x, const RecurrentParams& p, LstmSequenceCache* cache) {
  if (x.cols() != p.input)
    throw ValidationError(strf("lstm_forward: input width %zu, weights expect %zu", x.cols(), p.input));
  const std::size_t t_len = x.rows();
  const std::size_t h_dim = p.hidden;

  Matrix h_out(t_len, h_dim);
  if (cache) {
    cache->x = x;
    for (Matrix* m : {&cache->g, &cache->i, &cache->f, &cache->o, &cache->c, &cache->tanh_c})
      *m = Matrix(t_len, h_dim);
  }

  LstmState s(h_dim);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* h_prev = t == 0 ? nullptr : h_out.row(t - 1);
    const GatePre pre = gate_preactivations(x.row(t), h_prev, p);
    for (std::size_t j = 0; j < h_dim; ++j) {
      const double gv = std::tanh(pre.z[j]);
      const double iv = sigmoid(pre.i[j]);
      const double fv = sigmoid(pre.f[j]);
      const double ov = sigmoid(pre.o[j]);
      s.c[j] = fv * s.c[j] + iv * gv;
      const double tc = std::tanh(s.c[j]);
      s.h[j] = ov * tc;
      h_out(t, j) = s.h[j];
      if (cache) {
        cache->g(t, j) = gv;
        cache->i(t, j) = iv;
        cache->f(t, j) = fv;
        cache->o(t, j) = ov;
        cache->c(t, j) = s.c[j];
        cache->tanh_c(t, j) = tc;
      }
    }
  }
  if (cache) cache->h = h_out;
  return h_out;
}

Matrix lstm_backward(const RecurrentParams& p, const LstmSequenceCache& cache,
                     const Matrix& upstream, const RecurrentGrads& g) {
  const std::size_t t_len = cache.x.rows();
  const std::size_t h_dim = p.hidden;
  const std::size_t in_dim = p.input;
  if (upstream.rows() != t_len || upstream.cols() != h_dim)
    throw ValidationError("lstm_backward: upstream shape mismatch");

  Matrix dx(t_len, in_dim);
  std::vector<double> dh_rec(h_dim, 0.0), dc(h_dim, 0.0);
  std::vector<double> dg_pre(h_dim), di_pre(h_dim), df_pre(h_dim), do_pre(h_dim);

  for (std::size_t tt = t_len; tt-- > 0;) {
    for (std::size_t j = 0; j < h_dim; ++j) {
      const double dh = upstream(tt, j) + dh_rec[j];
      const double gv = cache.g(tt, j), iv = cache.i(tt, j);
      const double fv = cache.f(tt, j), ov = cache.o(tt, j);
      const double tc = cache.tanh_c(tt, j);

      do_pre[j] = dh * tc * ov * (1.0 - ov);
      const double dcj = dc[j] + dh * ov * (1.0 - tc * tc);
      di_pre[j] = dcj * gv * iv * (1.0 - iv);
      dg_pre[j] = dcj * iv * (1.0 - gv * gv);
      const double c_prev = tt > 0 ? cache.c(tt - 1, j) : 0.0;
      df_pre[j] = dcj * c_prev * fv * (1.0 - fv);
      dc[j] = dcj * fv;
    }

    const double* x_row = cache.x.row(tt);
    const double* h_prev = tt > 0 ? cache.h.row(tt - 1) : nullptr;
    const double* gates[4] = {dg_pre.data(), di_pre.data(), df_pre.data(), do_pre.data()};
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    for (int gi = 0; gi < 4; ++gi) {
      outer_acc(g.w[gi], h_dim, in_dim, gates[gi], x_row);
      for (std::size_t j = 0; j < h_dim; ++j) g.b[gi][j] += gates[gi][j];
      matvec_t_acc(p.w[gi], h_dim, in_dim, gates[gi], dx.row(tt));
      if (h_prev) {
        outer_acc(g.r[gi], h_dim, h_dim, gates[gi], h_prev);
        matvec_t_acc(p.r[gi], h_dim, h_dim, gates[gi], dh_rec.data());
      }
    }
  }
  return dx;
}

namespace {

Matrix split_cols(const Matrix& m, std::size_t from, std::size_t count) {
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = m(r, from + c);
  return out;
}

}  // namespace

Matrix bidirectional_slstm_forward(const Matrix& x, const SlstmParams& fwd, const SlstmParams& bwd,
                                   BiSlstmCache* cache) {
  const Matrix hf = slstm_forward(x, fwd, cache ? &cache->fwd : nullptr);
  const Matrix hb = slstm_forward(reverse_rows(x), bwd, cache ? &cache->bwd : nullptr);
  return hstack(hf, reverse_rows(hb));
}

Matrix bidirectional_slstm_backward(const SlstmParams& fwd, const SlstmParams& bwd,
                                    const BiSlstmCache& cache, const Matrix& upstream,
                                    const RecurrentGrads& gf, const RecurrentGrads& gb) {
  const std::size_t h_dim = fwd.rec.hidden;
  Matrix dx = slstm_backward(fwd, cache.fwd, split_cols(upstream, 0, h_dim), gf);
  const Matrix up_b = reverse_rows(split_cols(upstream, h_dim, bwd.rec.hidden));
  const Matrix dx_b = reverse_rows(slstm_backward(bwd, cache.bwd, up_b, gb));
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += dx_b.data()[i];
  return dx;
}

Matrix bidirectional_lstm_forward(const Matrix& x, const RecurrentParams& fwd, const RecurrentParams& bwd,
                                  BiLstmCache* cache) {
  const Matrix hf = lstm_forward(x, fwd, cache ? &cache->fwd : nullptr);
  const Matrix hb = lstm_forward(reverse_rows(x), bwd, cache ? &cache->bwd : nullptr);
  return hstack(hf, reverse_rows(hb));
}

Matrix bidirectional_lstm_backward(const RecurrentParams& fwd, const RecurrentParams& bwd,
                                   const BiLstmCache& cache, const Matrix& upstream,
                                   const RecurrentGrads& gf, const RecurrentGrads& gb) {
  const std::size_t h_dim = fwd.hidden;
  Matrix dx = lstm_backward(fwd, cache.fwd, split_cols(upstream, 0, h_dim), gf);
  const Matrix up_b = reverse_rows(split_cols(upstream, h_dim, bwd.hidden));
  const Matrix dx_b = reverse_rows(lstm_backward(bwd, cache.bwd, up_b, gb));
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += dx_b.data()[i];
  return dx;
}

}  // namespace imti
