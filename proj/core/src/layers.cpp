#include "imti/layers.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

Matrix affine_relu_forward(const Matrix& x, const Tensor& w, const Tensor& b, AffineReluCache* cache) {
  if (w.rank() != 2 || x.cols() != w.cols() || b.size() != w.rows())
    throw ValidationError("affine_relu_forward: shape mismatch");
  Matrix out(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    double* orow = out.row(r);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      const double* wr = w.data() + j * w.cols();
      double s = b[j];
      for (std::size_t c = 0; c < w.cols(); ++c) s += wr[c] * xr[c];
      orow[j] = s > 0.0 ? s : 0.0;
    }
  }
  if (cache) {
    cache->in = x;
    cache->out = out;
  }
  return out;
}

Matrix affine_relu_backward(const Tensor& w, const AffineReluCache& cache, const Matrix& upstream,
                            Tensor& dw, Tensor& db) {
  const Matrix& x = cache.in;
  if (upstream.rows() != x.rows() || upstream.cols() != w.rows())
    throw ValidationError("affine_relu_backward: shape mismatch");
  Matrix dx(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    double* dxr = dx.row(r);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      if (cache.out(r, j) <= 0.0) continue;
      const double g = upstream(r, j);
      if (g == 0.0) continue;
      const double* wr = w.data() + j * w.cols();
      double* dwr = dw.data() + j * w.cols();
      db[j] += g;
      for (std::size_t c = 0; c < w.cols(); ++c) {
        dwr[c] += g * xr[c];
        dxr[c] += g * wr[c];
      }
    }
  }
  return dx;
}

std::vector<ConvSpec> cnn_layout(const std::array<std::size_t, 4>& channels) {
  std::vector<ConvSpec> specs(12);
  for (std::size_t l = 0; l < 12; ++l) {
    const std::size_t group = l / 3;
    specs[l].out_ch = channels[group];
    specs[l].in_ch = l == 0 ? 1 : (l % 3 == 0 ? channels[group - 1] : channels[group]);
    specs[l].stride_f = l % 3 == 2 ? 3 : 1;
  }
  return specs;
}

namespace {

std::size_t strided_out(std::size_t in, std::size_t stride) {
  // kernel 3, pad 1 both sides
  return (in - 1) / stride + 1;
}

}  // namespace

FeatureMap conv_relu_forward(const FeatureMap& in, const Tensor& w, const Tensor& b, const ConvSpec& spec) {
  if (w.rank() != 4 || w.shape[0] != spec.out_ch || w.shape[1] != spec.in_ch ||
      w.shape[2] != 3 || w.shape[3] != 3 || in.channels != spec.in_ch)
    throw ValidationError("conv_relu_forward: kernel shape mismatch");
  const std::size_t t_len = in.t_len;
  const std::size_t f_out = strided_out(in.f_len, spec.stride_f);
  FeatureMap out(spec.out_ch, t_len, f_out);

  for (std::size_t co = 0; co < spec.out_ch; ++co) {
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t fo = 0; fo < f_out; ++fo) {
        double s = b[co];
        for (std::size_t ci = 0; ci < spec.in_ch; ++ci) {
          const double* kr = w.data() + ((co * spec.in_ch + ci) * 3) * 3;
          for (std::size_t dt = 0; dt < 3; ++dt) {
            const std::size_t ti = t + dt;  // minus pad 1
            if (ti < 1 || ti > t_len) continue;
            for (std::size_t df = 0; df < 3; ++df) {
              const std::size_t fi = fo * spec.stride_f + df;
              if (fi < 1 || fi > in.f_len) continue;
              s += kr[dt * 3 + df] * in.at(ci, ti - 1, fi - 1);
            }
          }
        }
        out.at(co, t, fo) = s > 0.0 ? s : 0.0;
      }
    }
  }
  return out;
}

FeatureMap conv_relu_backward(const FeatureMap& in, const FeatureMap& out, const Tensor& w,
                              const ConvSpec& spec, const FeatureMap& upstream, Tensor& dw, Tensor& db) {
  FeatureMap din(in.channels, in.t_len, in.f_len);
  const std::size_t f_out = out.f_len;

  for (std::size_t co = 0; co < spec.out_ch; ++co) {
    for (std::size_t t = 0; t < in.t_len; ++t) {
      for (std::size_t fo = 0; fo < f_out; ++fo) {
        if (out.at(co, t, fo) <= 0.0) continue;
        const double g = upstream.at(co, t, fo);
        if (g == 0.0) continue;
        db[co] += g;
        for (std::size_t ci = 0; ci < spec.in_ch; ++ci) {
          const double* kr = w.data() + ((co * spec.in_ch + ci) * 3) * 3;
          double* dkr = dw.data() + ((co * spec.in_ch + ci) * 3) * 3;
          for (std::size_t dt = 0; dt < 3; ++dt) {
            const std::size_t ti = t + dt;
            if (ti < 1 || ti > in.t_len) continue;
            for (std::size_t df = 0; df < 3; ++df) {
              const std::size_t fi = fo * spec.stride_f + df;
              if (fi < 1 || fi > in.f_len) continue;
              dkr[dt * 3 + df] += g * in.at(ci, ti - 1, fi - 1);
              din.at(ci, ti - 1, fi - 1) += g * kr[dt * 3 + df];
            }
          }
        }
      }
    }
  }
  return din;
}

Matrix cnn_forward(const Matrix& features, const ParameterSet& p, const ModelConfig& cfg, CnnCache* cache) {
  if (features.cols() != cfg.cnn_input_width())
    throw ValidationError(strf("cnn_forward: input width %zu, config expects %zu",
                               features.cols(), cfg.cnn_input_width()));
  const std::size_t t_len = features.rows();
  const std::vector<ConvSpec> specs = cnn_layout(cfg.cnn_channels);

  FeatureMap act(1, t_len, features.cols());
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t f = 0; f < features.cols(); ++f) act.at(0, t, f) = features(t, f);

  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(13);
    cache->acts.push_back(act);
  }
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const std::string base = strf("cnn.l%02zu", l);
    act = conv_relu_forward(act, p.at(base + ".w"), p.at(base + ".b"), specs[l]);
    if (cache) cache->acts.push_back(act);
  }

  const std::size_t flat = act.channels * act.f_len;
  Matrix out(t_len, flat);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t c = 0; c < act.channels; ++c)
      for (std::size_t f = 0; f < act.f_len; ++f) out(t, c * act.f_len + f) = act.at(c, t, f);
  return out;
}

Matrix cnn_backward(const ParameterSet& p, const ModelConfig& cfg, const CnnCache& cache,
                    const Matrix& upstream, ParameterSet& grads) {
  const std::vector<ConvSpec> specs = cnn_layout(cfg.cnn_channels);
  if (cache.acts.size() != specs.size() + 1) throw ValidationError("cnn_backward: cache is incomplete");
  const FeatureMap& last = cache.acts.back();
  const std::size_t t_len = last.t_len;
  if (upstream.rows() != t_len || upstream.cols() != last.channels * last.f_len)
    throw ValidationError("cnn_backward: upstream shape mismatch");

  FeatureMap d(last.channels, t_len, last.f_len);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t c = 0; c < last.channels; ++c)
      for (std::size_t f = 0; f < last.f_len; ++f) d.at(c, t, f) = upstream(t, c * last.f_len + f);

  for (std::size_t l = specs.size(); l-- > 0;) {
    const std::string base = strf("cnn.l%02zu", l);
    d = conv_relu_backward(cache.acts[l], cache.acts[l + 1], p.at(base + ".w"), specs[l], d,
                           grads.at(base + ".w"), grads.at(base + ".b"));
  }

  Matrix dx(t_len, cache.acts[0].f_len);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t f = 0; f < dx.cols(); ++f) dx(t, f) = d.at(0, t, f);
  return dx;
}

namespace {

Matrix affine_seq(const Matrix& x, const Tensor& w, const Tensor& b) {
  Matrix out(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    double* orow = out.row(r);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      const double* wr = w.data() + j * w.cols();
      double s = b[j];
      for (std::size_t c = 0; c < w.cols(); ++c) s += wr[c] * xr[c];
      orow[j] = s;
    }
  }
  return out;
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.row(r);
    double mx = row[0];
    for (std::size_t c = 1; c < m.cols(); ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] /= z;
  }
}

}  // namespace

BranchOutput branch_forward(const Matrix& s, const ParameterSet& p, const std::string& key,
                            BranchCache* cache) {
  const std::string base = "branch." + key + ".";
  const Tensor& wq = p.at(base + "wq");
  const Tensor& wk = p.at(base + "wk");
  const Tensor& wv = p.at(base + "wv");
  const Tensor& w_out = p.at(base + "w_out");
  const Tensor& b_out = p.at(base + "b_out");
  if (s.cols() != wq.cols()) throw ValidationError("branch_forward: sequence width mismatch");

  const Matrix q = affine_seq(s, wq, p.at(base + "bq"));
  const Matrix k = affine_seq(s, wk, p.at(base + "bk"));
  const Matrix v = affine_seq(s, wv, p.at(base + "bv"));

  Matrix att = matmul_nt(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.rows()));
  for (std::size_t i = 0; i < att.size(); ++i) att.data()[i] *= scale;
  softmax_rows(att);

  const Matrix ctx = matmul_nn(att, v);

  BranchOutput out;
  out.frame_scores.resize(s.rows());
  double total = 0.0;
  for (std::size_t t = 0; t < s.rows(); ++t) {
    const double* cr = ctx.row(t);
    double sc = b_out[0];
    for (std::size_t c = 0; c < w_out.cols(); ++c) sc += w_out[c] * cr[c];
    out.frame_scores[t] = sc;
    total += sc;
  }
  out.utterance = total / static_cast<double>(s.rows());

  if (cache) {
    cache->s = s;
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->att = att;
    cache->ctx = ctx;
    cache->frame_scores = out.frame_scores;
  }
  return out;
}

Matrix branch_backward(const ParameterSet& p, const std::string& key, const BranchCache& cache,
                       const std::vector<double>& d_frame, ParameterSet& grads) {
  const std::string base = "branch." + key + ".";
  const Tensor& wq = p.at(base + "wq");
  const Tensor& wk = p.at(base + "wk");
  const Tensor& wv = p.at(base + "wv");
  const Tensor& w_out = p.at(base + "w_out");
  const std::size_t t_len = cache.s.rows();
  const std::size_t width = wq.rows();
  if (d_frame.size() != t_len) throw ValidationError("branch_backward: frame gradient length mismatch");

  Tensor& dw_out = grads.at(base + "w_out");
  Tensor& db_out = grads.at(base + "b_out");
  Matrix dctx(t_len, width);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double g = d_frame[t];
    db_out[0] += g;
    const double* cr = cache.ctx.row(t);
    double* dr = dctx.row(t);
    for (std::size_t c = 0; c < width; ++c) {
      dw_out[c] += g * cr[c];
      dr[c] = g * w_out[c];
    }
  }

  Matrix datt = matmul_nt(dctx, cache.v);  // [T x T]
  Matrix dv = matmul_tn(cache.att, dctx);  // [T x width]

  // softmax rows: dlogit = a .* (datt - sum(datt .* a))
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  for (std::size_t r = 0; r < t_len; ++r) {
    const double* a = cache.att.row(r);
    double* da = datt.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < t_len; ++c) dot += da[c] * a[c];
    for (std::size_t c = 0; c < t_len; ++c) da[c] = a[c] * (da[c] - dot) * scale;
  }

  const Matrix dq = matmul_nn(datt, cache.k);
  const Matrix dk = matmul_tn(datt, cache.q);

  Matrix ds(t_len, cache.s.cols());
  struct Leg {
    const Matrix* d;
    const Tensor* w;
    const char* wn;
    const char* bn;
  };
  const Leg legs[3] = {{&dq, &wq, "wq", "bq"}, {&dk, &wk, "wk", "bk"}, {&dv, &wv, "wv", "bv"}};
  for (const Leg& leg : legs) {
    Tensor& dw = grads.at(base + leg.wn);
    Tensor& db = grads.at(base + leg.bn);
    for (std::size_t t = 0; t < t_len; ++t) {
      const double* drow = leg.d->row(t);
      const double* srow = cache.s.row(t);
      double* dsrow = ds.row(t);
      for (std::size_t j = 0; j < width; ++j) {
        const double g = drow[j];
        if (g == 0.0) continue;
        db[j] += g;
        const double* wrow = leg.w->data() + j * leg.w->cols();
        double* dwrow = dw.data() + j * leg.w->cols();
        for (std::size_t c = 0; c < cache.s.cols(); ++c) {
          dwrow[c] += g * srow[c];
          dsrow[c] += g * wrow[c];
        }
      }
    }
  }
  return ds;
}

}  // namespace imti
