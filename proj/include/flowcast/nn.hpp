// nn: IndRNN and LSTM cells, the dense head, and the stacked hybrid forward
// pass. Forward passes are pure; all arithmetic is 64-bit with a fixed
// evaluation order, so outputs are bit-reproducible.
#pragma once

#include <string>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast::nn {

enum class Activation { relu, sigmoid, tanh_fn, identity };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

double activate(Activation a, double x);

// sigma'(pre) recovered from the activation output. Exact for all four kinds:
// relu output 0 implies pre <= 0 where the derivative is defined as 0.
double activate_deriv_from_output(Activation a, double h);

// h_t = act(W x_t + u ⊙ h_{t-1} + b), with a per-neuron recurrent weight u.
struct IndRnnLayer {
  Mat W;   // N x M
  Vec u;   // length N, |u_n| <= u_max after every update
  Vec b;   // length N
  Activation act = Activation::relu;
  double u_max = 2.0;

  int in_size() const { return W.cols; }
  int size() const { return W.rows; }
};

// Preactivations and hidden states for every step, kept for BPTT.
struct IndRnnTrace {
  Mat pre;  // T x N
  Mat h;    // T x N
};

Mat indrnn_forward(const IndRnnLayer& layer, SeqView inputs, const Vec* h0 = nullptr,
                   IndRnnTrace* trace = nullptr);

// Per-neuron factor u_n^(t_end - t_start) * prod sigma'(pre_{n,k}) for
// k in (t_start, t_end]: the recurrence derivative d h_{n,t_end} / d h_{n,t_start}.
Vec indrnn_gradient_factor(const IndRnnLayer& layer, int t_start, int t_end,
                           const Mat& hidden);

// Gates: f_t, i_t, o_t sigmoid; candidate enters the cell state unsquashed by
// default (candidate_tanh turns on the squashed variant); h_t = o_t ⊙ tanh(c_t).
struct LstmLayer {
  Mat Wf, Wi, Wo, Wc;  // m x n input weights
  Mat Uf, Ui, Uo, Uc;  // m x m recurrent weights
  Vec bf, bi, bo, bc;  // length m
  bool candidate_tanh = false;

  int in_size() const { return Wf.cols; }
  int size() const { return Wf.rows; }
};

struct LstmTrace {
  Mat f, i, o, g, c, h;  // T x m each; g is the candidate after any squashing
};

Mat lstm_forward(const LstmLayer& layer, SeqView inputs, const Vec* h0 = nullptr,
                 const Vec* c0 = nullptr, Vec* c_final = nullptr, LstmTrace* trace = nullptr);

struct DenseLayer {
  Vec w;  // 1 x m read as a vector
  double b = 0.0;
  int in_size() const { return static_cast<int>(w.size()); }
};

double dense_forward(const DenseLayer& layer, const double* h, int n);

// IndRNN stack -> LSTM -> last-step hidden -> scalar head.
struct HybridNetwork {
  std::vector<IndRnnLayer> indrnn;
  LstmLayer lstm;
  DenseLayer head;

  int input_size() const { return indrnn.front().in_size(); }
};

double network_forward(const HybridNetwork& net, SeqView window);

struct Architecture {
  int input_size = 1;
  std::vector<int> indrnn_widths = {64, 64};
  int lstm_width = 64;
  Activation activation = Activation::relu;
  double u_max = 0.0;  // <= 0: default bound 2^(1/10) for the default window
  bool candidate_tanh = false;
};

// Weight matrices ~ U(-s, s) with s = sqrt(6 / (fan_in + fan_out)); u ~ U(0, 1];
// biases 0 except the forget-gate bias, which starts at 1.
HybridNetwork init_network(const Architecture& arch, uint64_t seed);

// Named views over every parameter tensor in a fixed order; drives the
// optimizer, clipping, serialization, and gradient checking.
struct TensorRef {
  std::string name;
  double* data;
  size_t size;
};

namespace detail {

// Works for any container with the network's member layout (gradient sets and
// optimizer moments mirror the parameter shapes exactly).
template <class NetLike>
std::vector<TensorRef> collect_tensor_refs(NetLike& n) {
  std::vector<TensorRef> refs;
  for (size_t i = 0; i < n.indrnn.size(); ++i) {
    auto& l = n.indrnn[i];
    const std::string p = "indrnn." + std::to_string(i) + ".";
    refs.push_back({p + "W", l.W.a.data(), l.W.a.size()});
    refs.push_back({p + "u", l.u.data(), l.u.size()});
    refs.push_back({p + "b", l.b.data(), l.b.size()});
  }
  auto& m = n.lstm;
  refs.push_back({"lstm.Wf", m.Wf.a.data(), m.Wf.a.size()});
  refs.push_back({"lstm.Wi", m.Wi.a.data(), m.Wi.a.size()});
  refs.push_back({"lstm.Wo", m.Wo.a.data(), m.Wo.a.size()});
  refs.push_back({"lstm.Wc", m.Wc.a.data(), m.Wc.a.size()});
  refs.push_back({"lstm.Uf", m.Uf.a.data(), m.Uf.a.size()});
  refs.push_back({"lstm.Ui", m.Ui.a.data(), m.Ui.a.size()});
  refs.push_back({"lstm.Uo", m.Uo.a.data(), m.Uo.a.size()});
  refs.push_back({"lstm.Uc", m.Uc.a.data(), m.Uc.a.size()});
  refs.push_back({"lstm.bf", m.bf.data(), m.bf.size()});
  refs.push_back({"lstm.bi", m.bi.data(), m.bi.size()});
  refs.push_back({"lstm.bo", m.bo.data(), m.bo.size()});
  refs.push_back({"lstm.bc", m.bc.data(), m.bc.size()});
  refs.push_back({"head.w", n.head.w.data(), n.head.w.size()});
  refs.push_back({"head.b", &n.head.b, 1});
  return refs;
}

}  // namespace detail

inline std::vector<TensorRef> tensor_refs(HybridNetwork& net) {
  return detail::collect_tensor_refs(net);
}

std::string to_json(const HybridNetwork& net);
HybridNetwork network_from_json(const std::string& text);
uint64_t parameter_checksum(const HybridNetwork& net);

}  // namespace flowcast::nn
