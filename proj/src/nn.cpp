#include "flowcast/nn.hpp"

#include <cmath>
#include <cstring>

#include <json.hpp>

namespace flowcast::nn {

using nlohmann::json;

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh_fn;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation: " + name);
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh_fn: return "tanh";
    case Activation::identity: return "identity";
  }
  return "relu";
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh_fn: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

double activate_deriv_from_output(Activation a, double h) {
  switch (a) {
    case Activation::relu: return h > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return h * (1.0 - h);
    case Activation::tanh_fn: return 1.0 - h * h;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

Mat indrnn_forward(const IndRnnLayer& layer, SeqView inputs, const Vec* h0,
                   IndRnnTrace* trace) {
  const int t_steps = inputs.steps;
  const int m = layer.in_size();
  const int n = layer.size();
  if (inputs.width != m)
    throw DataError("indrnn_forward: input width " + std::to_string(inputs.width) +
                    " != layer input size " + std::to_string(m));
  if (h0 && static_cast<int>(h0->size()) != n)
    throw DataError("indrnn_forward: h0 size mismatch");

  Mat h(t_steps, n);
  if (trace) trace->pre = Mat(t_steps, n);

  Vec prev = h0 ? *h0 : Vec(n, 0.0);
  for (int t = 0; t < t_steps; ++t) {
    const double* x = inputs.step(t);
    for (int j = 0; j < n; ++j) {
      double pre = layer.b[j];
      const double* wrow = layer.W.row(j);
      for (int k = 0; k < m; ++k) pre += wrow[k] * x[k];
      pre += layer.u[j] * prev[j];
      if (trace) trace->pre.at(t, j) = pre;
      h.at(t, j) = activate(layer.act, pre);
    }
    prev.assign(h.row(t), h.row(t) + n);
  }
  if (trace) trace->h = h;
  return h;
}

Vec indrnn_gradient_factor(const IndRnnLayer& layer, int t_start, int t_end,
                           const Mat& hidden) {
  if (t_start < 0 || t_end >= hidden.rows || t_start >= t_end)
    throw ConfigError("indrnn_gradient_factor: need 0 <= t_start < t_end < steps");
  const int n = layer.size();
  Vec factor(n, 1.0);
  for (int j = 0; j < n; ++j) {
    double f = 1.0;
    for (int k = t_start + 1; k <= t_end; ++k)
      f *= layer.u[j] * activate_deriv_from_output(layer.act, hidden.at(k, j));
    factor[j] = f;
  }
  return factor;
}

Mat lstm_forward(const LstmLayer& layer, SeqView inputs, const Vec* h0, const Vec* c0,
                 Vec* c_final, LstmTrace* trace) {
  const int t_steps = inputs.steps;
  const int n = layer.in_size();
  const int m = layer.size();
  if (t_steps > 0 && inputs.width != n)
    throw DataError("lstm_forward: input width " + std::to_string(inputs.width) +
                    " != layer input size " + std::to_string(n));
  if (h0 && static_cast<int>(h0->size()) != m) throw DataError("lstm_forward: h0 size mismatch");
  if (c0 && static_cast<int>(c0->size()) != m) throw DataError("lstm_forward: c0 size mismatch");

  Mat h(t_steps, m);
  if (trace) {
    trace->f = Mat(t_steps, m);
    trace->i = Mat(t_steps, m);
    trace->o = Mat(t_steps, m);
    trace->g = Mat(t_steps, m);
    trace->c = Mat(t_steps, m);
  }

  Vec h_prev = h0 ? *h0 : Vec(m, 0.0);
  Vec c_prev = c0 ? *c0 : Vec(m, 0.0);
  Vec c_cur(m, 0.0);

  for (int t = 0; t < t_steps; ++t) {
    const double* x = inputs.step(t);
    for (int j = 0; j < m; ++j) {
      double pre_f = layer.bf[j], pre_i = layer.bi[j], pre_o = layer.bo[j], pre_g = layer.bc[j];
      const double* wf = layer.Wf.row(j);
      const double* wi = layer.Wi.row(j);
      const double* wo = layer.Wo.row(j);
      const double* wc = layer.Wc.row(j);
      for (int k = 0; k < n; ++k) {
        pre_f += wf[k] * x[k];
        pre_i += wi[k] * x[k];
        pre_o += wo[k] * x[k];
        pre_g += wc[k] * x[k];
      }
      const double* uf = layer.Uf.row(j);
      const double* ui = layer.Ui.row(j);
      const double* uo = layer.Uo.row(j);
      const double* uc = layer.Uc.row(j);
      for (int k = 0; k < m; ++k) {
        pre_f += uf[k] * h_prev[k];
        pre_i += ui[k] * h_prev[k];
        pre_o += uo[k] * h_prev[k];
        pre_g += uc[k] * h_prev[k];
      }
      const double f = 1.0 / (1.0 + std::exp(-pre_f));
      const double i = 1.0 / (1.0 + std::exp(-pre_i));
      const double o = 1.0 / (1.0 + std::exp(-pre_o));
      const double g = layer.candidate_tanh ? std::tanh(pre_g) : pre_g;
      const double c = f * c_prev[j] + i * g;
      h.at(t, j) = o * std::tanh(c);
      c_cur[j] = c;
      if (trace) {
        trace->f.at(t, j) = f;
        trace->i.at(t, j) = i;
        trace->o.at(t, j) = o;
        trace->g.at(t, j) = g;
        trace->c.at(t, j) = c;
      }
    }
    c_prev = c_cur;
    h_prev.assign(h.row(t), h.row(t) + m);
  }
  if (c_final) *c_final = c_prev;
  if (trace) trace->h = h;
  return h;
}

double dense_forward(const DenseLayer& layer, const double* h, int n) {
  if (n != layer.in_size()) throw DataError("dense_forward: input size mismatch");
  double out = layer.b;
  for (int k = 0; k < n; ++k) out += layer.w[k] * h[k];
  return out;
}

double network_forward(const HybridNetwork& net, SeqView window) {
  if (window.steps < 1) throw DataError("network_forward: empty window");
  if (window.width != net.input_size())
    throw DataError("network_forward: window width " + std::to_string(window.width) +
                    " != network input size " + std::to_string(net.input_size()));

  Mat cur;
  SeqView v = window;
  for (const IndRnnLayer& layer : net.indrnn) {
    cur = indrnn_forward(layer, v);
    v = view_of(cur);
  }
  const Mat h = lstm_forward(net.lstm, v);
  return dense_forward(net.head, h.row(h.rows - 1), h.cols);
}

namespace {

void fill_uniform(Rng& rng, double* data, size_t n, double s) {
  for (size_t i = 0; i < n; ++i) data[i] = rng.uniform(-s, s);
}

double glorot_bound(int fan_in, int fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); }

}  // namespace

HybridNetwork init_network(const Architecture& arch, uint64_t seed) {
  if (arch.input_size < 1 || arch.lstm_width < 1 || arch.indrnn_widths.empty())
    throw ConfigError("init_network: widths must be positive and the stack non-empty");
  for (int w : arch.indrnn_widths)
    if (w < 1) throw ConfigError("init_network: widths must be positive");

  const double u_max = arch.u_max > 0.0 ? arch.u_max : std::pow(2.0, 1.0 / 10.0);
  Rng rng(seed);

  HybridNetwork net;
  int in = arch.input_size;
  for (int width : arch.indrnn_widths) {
    IndRnnLayer l;
    l.W = Mat(width, in);
    fill_uniform(rng, l.W.a.data(), l.W.a.size(), glorot_bound(in, width));
    l.u.resize(width);
    for (double& u : l.u) u = rng.uniform_open_closed();
    l.b.assign(width, 0.0);
    l.act = arch.activation;
    l.u_max = u_max;
    net.indrnn.push_back(std::move(l));
    in = width;
  }

  const int m = arch.lstm_width;
  LstmLayer& lstm = net.lstm;
  const double sw = glorot_bound(in, m);
  const double su = glorot_bound(m, m);
  for (Mat* w : {&lstm.Wf, &lstm.Wi, &lstm.Wo, &lstm.Wc}) {
    *w = Mat(m, in);
    fill_uniform(rng, w->a.data(), w->a.size(), sw);
  }
  for (Mat* u : {&lstm.Uf, &lstm.Ui, &lstm.Uo, &lstm.Uc}) {
    *u = Mat(m, m);
    fill_uniform(rng, u->a.data(), u->a.size(), su);
  }
  lstm.bf.assign(m, 1.0);  // forget gate opens wide at the start
  lstm.bi.assign(m, 0.0);
  lstm.bo.assign(m, 0.0);
  lstm.bc.assign(m, 0.0);
  lstm.candidate_tanh = arch.candidate_tanh;

  net.head.w.resize(m);
  fill_uniform(rng, net.head.w.data(), net.head.w.size(), glorot_bound(m, 1));
  net.head.b = 0.0;
  return net;
}

std::string to_json(const HybridNetwork& net) {
  json arch;
  arch["input_size"] = net.input_size();
  std::vector<int> widths;
  for (const IndRnnLayer& l : net.indrnn) widths.push_back(l.size());
  arch["indrnn_widths"] = widths;
  arch["lstm_width"] = net.lstm.size();
  arch["activation"] = activation_name(net.indrnn.front().act);
  arch["u_max"] = net.indrnn.front().u_max;
  arch["candidate_tanh"] = net.lstm.candidate_tanh;

  json tensors = json::object();
  auto& mutable_net = const_cast<HybridNetwork&>(net);  // read-only traversal
  for (const TensorRef& ref : tensor_refs(mutable_net))
    tensors[ref.name] = std::vector<double>(ref.data, ref.data + ref.size);

  json j;
  j["format"] = "flowcast-network";
  j["version"] = 1;
  j["architecture"] = std::move(arch);
  j["tensors"] = std::move(tensors);
  return j.dump(2) + "\n";
}

HybridNetwork network_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != std::string("flowcast-network"))
    throw DataError("not a flowcast network document");
  const json& arch_j = j.at("architecture");

  Architecture arch;
  arch.input_size = arch_j.at("input_size").get<int>();
  arch.indrnn_widths = arch_j.at("indrnn_widths").get<std::vector<int>>();
  arch.lstm_width = arch_j.at("lstm_width").get<int>();
  arch.activation = activation_from_name(arch_j.at("activation").get<std::string>());
  arch.u_max = arch_j.at("u_max").get<double>();
  arch.candidate_tanh = arch_j.at("candidate_tanh").get<bool>();

  HybridNetwork net = init_network(arch, 0);
  const json& tensors = j.at("tensors");
  for (const TensorRef& ref : tensor_refs(net)) {
    const auto values = tensors.at(ref.name).get<std::vector<double>>();
    if (values.size() != ref.size)
      throw DataError("tensor '" + ref.name + "' has wrong length");
    std::memcpy(ref.data, values.data(), ref.size * sizeof(double));
  }
  return net;
}

uint64_t parameter_checksum(const HybridNetwork& net) {
  uint64_t h = 1469598103934665603ULL;
  auto& mutable_net = const_cast<HybridNetwork&>(net);
  for (const TensorRef& ref : tensor_refs(mutable_net))
    h = fnv1a64(ref.data, ref.size * sizeof(double), h);
  return h;
}

}  // namespace flowcast::nn
