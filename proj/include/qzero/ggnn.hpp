#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qzero/graph.hpp"
#include "qzero/rng.hpp"

namespace qzero {

struct GgnnConfig {
  int hidden_size = 128;  // H, >= 3 (one-hot node kinds live in the prefix)
  int passes = 10;        // message-passing rounds T
  int mlp_hidden = 128;   // readout MLP hidden width
  static constexpr int kActionCount = 2;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  enum class Optimizer { PlainGradient, AdaptiveMoment };
  Optimizer optimizer = Optimizer::AdaptiveMoment;

  void validate() const {
    if (hidden_size < 3)
      throw std::invalid_argument("GgnnConfig: hidden_size must be >= 3");
    if (passes < 1) throw std::invalid_argument("GgnnConfig: passes must be >= 1");
    if (mlp_hidden < 2)
      throw std::invalid_argument("GgnnConfig: mlp_hidden must be >= 2");
  }
  friend bool operator==(const GgnnConfig&, const GgnnConfig&) = default;
};

// Two-layer perceptron, rectifier in the middle. Weights are stored
// (out x in) and applied to row vectors as x * W^T + b^T.
template <typename Scalar>
struct MlpT {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat w1, b1;  // (hidden x in), (hidden x 1)
  Mat w2, b2;  // (out x hidden), (out x 1)
};

// All learnable weights of one player's network. Biases are column
// matrices so every tensor can be visited uniformly.
template <typename Scalar>
struct GgnnParamsT {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GgnnConfig config;
  std::array<Mat, kEdgeTypeCount> edge;  // one H x H matrix per EdgeType
  Mat gru_wz, gru_uz, gru_bz;
  Mat gru_wr, gru_ur, gru_br;
  Mat gru_wn, gru_un, gru_bn;
  MlpT<Scalar> policy_f, policy_g;  // f: 2H -> actions, g: H -> actions
  MlpT<Scalar> value_f, value_g;    // f: 2H -> 1, g: H -> 1

  // Fixed visiting order; checkpoint layout and the optimizer rely on it.
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("edge_e2a", self.edge[0]);
    fn("edge_a2e", self.edge[1]);
    fn("edge_l2c", self.edge[2]);
    fn("edge_complement", self.edge[3]);
    fn("gru_wz", self.gru_wz);
    fn("gru_uz", self.gru_uz);
    fn("gru_bz", self.gru_bz);
    fn("gru_wr", self.gru_wr);
    fn("gru_ur", self.gru_ur);
    fn("gru_br", self.gru_br);
    fn("gru_wn", self.gru_wn);
    fn("gru_un", self.gru_un);
    fn("gru_bn", self.gru_bn);
    fn("policy_f_w1", self.policy_f.w1);
    fn("policy_f_b1", self.policy_f.b1);
    fn("policy_f_w2", self.policy_f.w2);
    fn("policy_f_b2", self.policy_f.b2);
    fn("policy_g_w1", self.policy_g.w1);
    fn("policy_g_b1", self.policy_g.b1);
    fn("policy_g_w2", self.policy_g.w2);
    fn("policy_g_b2", self.policy_g.b2);
    fn("value_f_w1", self.value_f.w1);
    fn("value_f_b1", self.value_f.b1);
    fn("value_f_w2", self.value_f.w2);
    fn("value_f_b2", self.value_f.b2);
    fn("value_g_w1", self.value_g.w1);
    fn("value_g_b1", self.value_g.b1);
    fn("value_g_w2", self.value_g.w2);
    fn("value_g_b2", self.value_g.b2);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit(*this, fn);
  }

  Scalar squared_norm() const {
    Scalar s = 0;
    for_each_tensor([&](const char*, const Mat& m) { s += m.squaredNorm(); });
    return s;
  }
};

using GgnnParams = GgnnParamsT<double>;

// Network output. policy sums to 1, value lies in [-1, 1].
struct PolicyValue {
  std::array<double, 2> policy{0.5, 0.5};
  double value = 0.0;
};

template <typename Scalar>
struct ForwardOutT {
  Eigen::Matrix<Scalar, 2, 1> logits;  // pre-softmax policy head
  Eigen::Matrix<Scalar, 2, 1> policy;
  Scalar value = 0;

  PolicyValue policy_value() const {
    return PolicyValue{{static_cast<double>(policy(0)),
                        static_cast<double>(policy(1))},
                       static_cast<double>(value)};
  }
};
using ForwardOut = ForwardOutT<double>;

struct TrainingExample {
  QbfGraph graph;
  std::array<double, 2> target_policy{0.0, 0.0};
  double target_value = 0.0;  // +1 / -1, mover's perspective
};

namespace detail {

// Zero params with the shapes implied by cfg.
template <typename Scalar>
GgnnParamsT<Scalar> shaped_params(const GgnnConfig& cfg) {
  cfg.validate();
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  const int h = cfg.hidden_size;
  const int mh = cfg.mlp_hidden;
  const int actions = GgnnConfig::kActionCount;

  GgnnParamsT<Scalar> p;
  p.config = cfg;
  for (auto& m : p.edge) m = Mat::Zero(h, h);
  p.gru_wz = p.gru_uz = p.gru_wr = p.gru_ur = p.gru_wn = p.gru_un =
      Mat::Zero(h, h);
  p.gru_bz = p.gru_br = p.gru_bn = Mat::Zero(h, 1);
  const auto mlp = [&](int in, int out) {
    MlpT<Scalar> m;
    m.w1 = Mat::Zero(mh, in);
    m.b1 = Mat::Zero(mh, 1);
    m.w2 = Mat::Zero(out, mh);
    m.b2 = Mat::Zero(out, 1);
    return m;
  };
  p.policy_f = mlp(2 * h, actions);
  p.policy_g = mlp(h, actions);
  p.value_f = mlp(2 * h, 1);
  p.value_g = mlp(h, 1);
  return p;
}

}  // namespace detail

template <typename Scalar>
GgnnParamsT<Scalar> zero_like(const GgnnParamsT<Scalar>& p) {
  GgnnParamsT<Scalar> z = p;
  z.for_each_tensor(
      [](const char*, typename GgnnParamsT<Scalar>::Mat& m) { m.setZero(); });
  return z;
}

// Weights uniform in [-sqrt(6/fan_in), sqrt(6/fan_in)] where fan_in is the
// input width of the tensor; biases zero. Deterministic per seed.
template <typename Scalar = double>
GgnnParamsT<Scalar> init_params(const GgnnConfig& cfg, std::uint64_t seed) {
  GgnnParamsT<Scalar> p = detail::shaped_params<Scalar>(cfg);
  Rng rng(mix_seed(seed, 0x99A17ULL));
  p.for_each_tensor([&](const char*, typename GgnnParamsT<Scalar>::Mat& m) {
    if (m.cols() == 1) return;  // bias
    const double bound = std::sqrt(6.0 / static_cast<double>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        m(r, c) = static_cast<Scalar>(rng.symmetric(bound));
  });
  return p;
}

template <typename Scalar>
struct ForwardTraceT {
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  std::array<Mat, kEdgeTypeCount> adj;  // N x N, symmetric, multiplicities
  std::vector<Mat> h;                   // node states, T+1 entries
  struct Pass {
    Mat m, z, r, c, k;  // message, update/reset gates, candidate, Un-projection
  };
  std::vector<Pass> passes;
  struct Head {
    Mat f1, sf, g1, g2;  // relu(f layer 1), sigmoid(f out), relu(g layer 1), g out
  };
  Head policy_head, value_head;
  Mat concat;  // [h^T | h^0]
};

namespace detail {

template <typename Scalar>
std::array<typename GgnnParamsT<Scalar>::Mat, kEdgeTypeCount> adjacency(
    const QbfGraph& g) {
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  const int n = g.node_count();
  std::array<Mat, kEdgeTypeCount> adj;
  for (auto& a : adj) a = Mat::Zero(n, n);
  for (const GraphEdge& e : g.edges) {
    Mat& a = adj[static_cast<std::size_t>(e.type)];
    a(e.u, e.v) += Scalar(1);
    a(e.v, e.u) += Scalar(1);
  }
  return adj;
}

template <typename Scalar>
typename GgnnParamsT<Scalar>::Mat mlp_apply(const MlpT<Scalar>& mlp,
                                            const typename GgnnParamsT<Scalar>::Mat& x,
                                            typename GgnnParamsT<Scalar>::Mat* hidden_out) {
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  Mat a1 = (x * mlp.w1.transpose()).rowwise() + mlp.b1.col(0).transpose();
  a1 = a1.cwiseMax(Scalar(0));
  Mat out = (a1 * mlp.w2.transpose()).rowwise() + mlp.b2.col(0).transpose();
  if (hidden_out) *hidden_out = std::move(a1);
  return out;
}

}  // namespace detail

// Full forward pass over one graph. With `trace` set, every intermediate
// needed by the backward pass is recorded.
template <typename Scalar>
ForwardOutT<Scalar> forward_full(const GgnnParamsT<Scalar>& p, const QbfGraph& g,
                                 ForwardTraceT<Scalar>* trace = nullptr) {
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  if (g.node_count() == 0)
    throw std::invalid_argument("forward: empty graph");

  const int hsz = p.config.hidden_size;
  const int passes = p.config.passes;
  const auto adj = detail::adjacency<Scalar>(g);
  const Mat h0 = init_features<Scalar>(g, hsz);

  Mat h = h0;
  if (trace) {
    trace->adj = adj;
    trace->h.clear();
    trace->h.reserve(static_cast<std::size_t>(passes) + 1);
    trace->h.push_back(h);
    trace->passes.clear();
    trace->passes.reserve(static_cast<std::size_t>(passes));
  }

  for (int t = 0; t < passes; ++t) {
    Mat msg = Mat::Zero(h.rows(), hsz);
    for (int e = 0; e < kEdgeTypeCount; ++e) {
      msg.noalias() +=
          adj[static_cast<std::size_t>(e)] *
          (h * p.edge[static_cast<std::size_t>(e)].transpose());
    }
    Mat z = ((msg * p.gru_wz.transpose() + h * p.gru_uz.transpose()).rowwise() +
             p.gru_bz.col(0).transpose())
                .array()
                .logistic()
                .matrix();
    Mat r = ((msg * p.gru_wr.transpose() + h * p.gru_ur.transpose()).rowwise() +
             p.gru_br.col(0).transpose())
                .array()
                .logistic()
                .matrix();
    Mat k = h * p.gru_un.transpose();
    Mat c = ((msg * p.gru_wn.transpose() + r.cwiseProduct(k)).rowwise() +
             p.gru_bn.col(0).transpose())
                .array()
                .tanh()
                .matrix();
    Mat hn = (Mat::Ones(h.rows(), hsz) - z).cwiseProduct(c) + z.cwiseProduct(h);
    if (trace)
      trace->passes.push_back({std::move(msg), std::move(z), std::move(r),
                               std::move(c), std::move(k)});
    h = std::move(hn);
    if (trace) trace->h.push_back(h);
  }

  Mat concat(h.rows(), 2 * hsz);
  concat << h, h0;

  // R_i = sum_v sigmoid(f_i(h_v^T, h_v^0)) . g_i(h_v^T)
  const auto readout = [&](const MlpT<Scalar>& f, const MlpT<Scalar>& mg,
                           typename ForwardTraceT<Scalar>::Head* head) {
    Mat f1, g1;
    Mat sf = detail::mlp_apply<Scalar>(f, concat, trace ? &f1 : nullptr)
                 .array()
                 .logistic()
                 .matrix();
    Mat g2 = detail::mlp_apply<Scalar>(mg, h, trace ? &g1 : nullptr);
    Mat summed = sf.cwiseProduct(g2).colwise().sum();
    if (trace && head)
      *head = {std::move(f1), std::move(sf), std::move(g1), std::move(g2)};
    return summed;  // 1 x out
  };

  Mat r1 = readout(p.policy_f, p.policy_g, trace ? &trace->policy_head : nullptr);
  Mat r2 = readout(p.value_f, p.value_g, trace ? &trace->value_head : nullptr);
  if (trace) trace->concat = std::move(concat);

  ForwardOutT<Scalar> out;
  out.logits(0) = r1(0, 0);
  out.logits(1) = r1(0, 1);
  const Scalar mx = out.logits.maxCoeff();
  Eigen::Matrix<Scalar, 2, 1> ex = (out.logits.array() - mx).exp();
  out.policy = ex / ex.sum();
  out.value = std::tanh(r2(0, 0));
  return out;
}

inline PolicyValue forward(const GgnnParams& p, const QbfGraph& g) {
  return forward_full(p, g).policy_value();
}

// (z - v)^2 - sum_a pi_a log p_a + weight_decay * |params|^2.
// Cross-entropy is computed from the logits for stability.
template <typename Scalar>
Scalar loss(const ForwardOutT<Scalar>& pred, const TrainingExample& ex,
            const GgnnParamsT<Scalar>& params) {
  const Scalar mx = pred.logits.maxCoeff();
  const Scalar lse =
      mx + std::log((pred.logits.array() - mx).exp().sum());
  Scalar ce = 0;
  for (int a = 0; a < 2; ++a) {
    ce -= static_cast<Scalar>(ex.target_policy[static_cast<std::size_t>(a)]) *
          (pred.logits(a) - lse);
  }
  const Scalar dv = static_cast<Scalar>(ex.target_value) - pred.value;
  return dv * dv + ce +
         static_cast<Scalar>(params.config.weight_decay) * params.squared_norm();
}

namespace detail {

// Accumulates d(loss)/d(params) for one example into `grad`.
template <typename Scalar>
Scalar backward_example(const GgnnParamsT<Scalar>& p, const TrainingExample& ex,
                        GgnnParamsT<Scalar>& grad) {
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  ForwardTraceT<Scalar> tr;
  const ForwardOutT<Scalar> out = forward_full(p, ex.graph, &tr);
  const Scalar example_loss = loss(out, ex, p);

  const int hsz = p.config.hidden_size;
  const Eigen::Index n = tr.h.front().rows();

  // Head gradients.
  Eigen::Matrix<Scalar, 2, 1> dlogits = out.policy;
  dlogits(0) -= static_cast<Scalar>(ex.target_policy[0]);
  dlogits(1) -= static_cast<Scalar>(ex.target_policy[1]);
  const Scalar dval = Scalar(2) * (out.value - static_cast<Scalar>(ex.target_value)) *
                      (Scalar(1) - out.value * out.value);

  const Mat& ht = tr.h.back();
  Mat dht = Mat::Zero(n, hsz);

  const auto readout_backward = [&](const typename ForwardTraceT<Scalar>::Head& head,
                                    const MlpT<Scalar>& f, const MlpT<Scalar>& mg,
                                    MlpT<Scalar>& df, MlpT<Scalar>& dmg,
                                    const Mat& dr) {
    // dr is 1 x out; every node row receives it.
    Mat ds = Mat::Ones(n, 1) * dr;
    Mat df2 = ds.cwiseProduct(head.g2)
                  .cwiseProduct(head.sf)
                  .cwiseProduct(Mat::Ones(n, dr.cols()) - head.sf);
    Mat dg2 = ds.cwiseProduct(head.sf);

    df.w2.noalias() += df2.transpose() * head.f1;
    df.b2.col(0).noalias() += df2.colwise().sum().transpose();
    Mat df1 = (df2 * f.w2).cwiseProduct(
        (head.f1.array() > Scalar(0)).template cast<Scalar>().matrix());
    df.w1.noalias() += df1.transpose() * tr.concat;
    df.b1.col(0).noalias() += df1.colwise().sum().transpose();
    dht.noalias() += (df1 * f.w1).leftCols(hsz);  // h^0 half is constant

    dmg.w2.noalias() += dg2.transpose() * head.g1;
    dmg.b2.col(0).noalias() += dg2.colwise().sum().transpose();
    Mat dg1 = (dg2 * mg.w2).cwiseProduct(
        (head.g1.array() > Scalar(0)).template cast<Scalar>().matrix());
    dmg.w1.noalias() += dg1.transpose() * ht;
    dmg.b1.col(0).noalias() += dg1.colwise().sum().transpose();
    dht.noalias() += dg1 * mg.w1;
  };

  readout_backward(tr.policy_head, p.policy_f, p.policy_g, grad.policy_f,
                   grad.policy_g, dlogits.transpose());
  readout_backward(tr.value_head, p.value_f, p.value_g, grad.value_f,
                   grad.value_g, Mat::Constant(1, 1, dval));

  // Back through the message-passing recurrence.
  Mat dh = std::move(dht);
  for (int t = p.config.passes - 1; t >= 0; --t) {
    const auto& pass = tr.passes[static_cast<std::size_t>(t)];
    const Mat& hc = tr.h[static_cast<std::size_t>(t)];

    Mat dz = dh.cwiseProduct(hc - pass.c);
    Mat daz = dz.cwiseProduct(pass.z)
                  .cwiseProduct(Mat::Ones(n, hsz) - pass.z);
    Mat dc = dh.cwiseProduct(Mat::Ones(n, hsz) - pass.z);
    Mat dac = dc.cwiseProduct(Mat::Ones(n, hsz) - pass.c.cwiseProduct(pass.c));
    Mat dhc = dh.cwiseProduct(pass.z);

    // Candidate gate.
    Mat dmsg = dac * p.gru_wn;
    grad.gru_wn.noalias() += dac.transpose() * pass.m;
    grad.gru_bn.col(0).noalias() += dac.colwise().sum().transpose();
    Mat dr = dac.cwiseProduct(pass.k);
    Mat dk = dac.cwiseProduct(pass.r);
    grad.gru_un.noalias() += dk.transpose() * hc;
    dhc.noalias() += dk * p.gru_un;

    // Reset gate.
    Mat dar = dr.cwiseProduct(pass.r).cwiseProduct(Mat::Ones(n, hsz) - pass.r);
    dmsg.noalias() += dar * p.gru_wr;
    grad.gru_wr.noalias() += dar.transpose() * pass.m;
    grad.gru_br.col(0).noalias() += dar.colwise().sum().transpose();
    dhc.noalias() += dar * p.gru_ur;
    grad.gru_ur.noalias() += dar.transpose() * hc;

    // Update gate.
    dmsg.noalias() += daz * p.gru_wz;
    grad.gru_wz.noalias() += daz.transpose() * pass.m;
    grad.gru_bz.col(0).noalias() += daz.colwise().sum().transpose();
    dhc.noalias() += daz * p.gru_uz;
    grad.gru_uz.noalias() += daz.transpose() * hc;

    // Message aggregation.
    for (int e = 0; e < kEdgeTypeCount; ++e) {
      const Mat& a = tr.adj[static_cast<std::size_t>(e)];
      grad.edge[static_cast<std::size_t>(e)].noalias() +=
          dmsg.transpose() * (a * hc);
      dhc.noalias() += a * (dmsg * p.edge[static_cast<std::size_t>(e)]);
    }
    dh = std::move(dhc);
  }
  return example_loss;
}

}  // namespace detail

// Mean gradient over a batch, exact reverse-mode. Optionally reports the
// mean per-example loss (weight decay included).
template <typename Scalar>
GgnnParamsT<Scalar> gradients(const GgnnParamsT<Scalar>& params,
                              const std::vector<TrainingExample>& batch,
                              Scalar* mean_loss = nullptr) {
  if (batch.empty()) throw std::invalid_argument("gradients: empty batch");
  GgnnParamsT<Scalar> grad = zero_like(params);
  Scalar total = 0;
  for (const TrainingExample& ex : batch)
    total += detail::backward_example(params, ex, grad);

  const Scalar inv = Scalar(1) / static_cast<Scalar>(batch.size());
  const Scalar decay =
      Scalar(2) * static_cast<Scalar>(params.config.weight_decay);
  std::vector<const typename GgnnParamsT<Scalar>::Mat*> src;
  params.for_each_tensor(
      [&](const char*, const typename GgnnParamsT<Scalar>::Mat& m) {
        src.push_back(&m);
      });
  std::size_t i = 0;
  grad.for_each_tensor([&](const char*, typename GgnnParamsT<Scalar>::Mat& m) {
    m *= inv;
    m.noalias() += decay * (*src[i++]);
  });
  if (mean_loss) *mean_loss = total * inv;
  return grad;
}

template <typename Scalar>
struct OptimStateT {
  long long step = 0;
  bool initialized = false;
  GgnnParamsT<Scalar> m, v;  // first/second moment accumulators
};
using OptimState = OptimStateT<double>;

// Applies one update in place. Plain mode: theta -= lr * g. Adaptive mode:
// Adam with beta1=0.9, beta2=0.999, eps=1e-8, bias-corrected.
template <typename Scalar>
void optimizer_step(GgnnParamsT<Scalar>& params, const GgnnParamsT<Scalar>& grads,
                    OptimStateT<Scalar>& state) {
  using Mat = typename GgnnParamsT<Scalar>::Mat;
  std::vector<const Mat*> gs;
  grads.for_each_tensor([&](const char*, const Mat& m) { gs.push_back(&m); });
  {
    std::size_t i = 0;
    bool ok = true;
    params.for_each_tensor([&](const char*, const Mat& m) {
      const Mat& g = *gs[i++];
      if (g.rows() != m.rows() || g.cols() != m.cols()) ok = false;
    });
    if (!ok)
      throw std::invalid_argument("optimizer_step: gradient shape mismatch");
  }

  const Scalar lr = static_cast<Scalar>(params.config.learning_rate);
  if (params.config.optimizer == GgnnConfig::Optimizer::PlainGradient) {
    std::size_t i = 0;
    params.for_each_tensor([&](const char*, Mat& m) { m -= lr * (*gs[i++]); });
    ++state.step;
    return;
  }

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  if (!state.initialized) {
    state.m = zero_like(params);
    state.v = zero_like(params);
    state.initialized = true;
  }
  ++state.step;
  const Scalar c1 =
      Scalar(1) / static_cast<Scalar>(1.0 - std::pow(kBeta1, state.step));
  const Scalar c2 =
      Scalar(1) / static_cast<Scalar>(1.0 - std::pow(kBeta2, state.step));

  std::vector<Mat*> ms, vs;
  state.m.for_each_tensor([&](const char*, Mat& m) { ms.push_back(&m); });
  state.v.for_each_tensor([&](const char*, Mat& m) { vs.push_back(&m); });
  std::size_t i = 0;
  params.for_each_tensor([&](const char*, Mat& m) {
    const Mat& g = *gs[i];
    Mat& mm = *ms[i];
    Mat& vv = *vs[i];
    ++i;
    mm = Scalar(kBeta1) * mm + Scalar(1 - kBeta1) * g;
    vv = Scalar(kBeta2) * vv + Scalar(1 - kBeta2) * g.cwiseProduct(g);
    m.array() -= lr * (mm.array() * c1) /
                 ((vv.array() * c2).sqrt() + Scalar(kEps));
  });
}

}  // namespace qzero
