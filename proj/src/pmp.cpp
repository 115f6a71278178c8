#include "revision/pmp.hpp"

#include "revision/error.hpp"
#include "revision/nn.hpp"
#include "revision/rng.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace revision {

using RM = nn::RowMatrix<double>;

constexpr double kMinInputScale = 1e-3;
constexpr double kOutputInitGain = 0.01;
constexpr double kMinErrorFraction = 0.2;

std::vector<std::string> default_vocab() {
  return {"human", "animal", "object", "static", "walk", "reach", "wave", "drop", "slide", "left", "right", "fast",
          "slow"};
}

void check_config(const PmpConfig& c) {
  if (c.layers < 1 || c.model_dim < 1 || c.heads < 1 || c.ffn_dim < 1 || c.max_frames < 1 || c.max_pose_dim < 1)
    fail(ErrorCode::InvalidConfig, "PMP dimensions must be positive");
  if (c.model_dim % c.heads != 0) fail(ErrorCode::InvalidConfig, "model_dim must be divisible by heads");
  if (c.refine_iterations < 1) fail(ErrorCode::InvalidConfig, "refine_iterations must be positive");
  for (Category cat : {Category::Human, Category::Animal, Category::GenericObject})
    if (preset_model(cat)->pose_dim > c.max_pose_dim)
      fail(ErrorCode::InvalidConfig, "max_pose_dim is smaller than the " + std::string(to_string(cat)) + " model");
}

Conditioning make_conditioning(const PmpConfig& config, const std::vector<std::string>& tags, double strength,
                               Category category) {
  Conditioning c;
  c.strength = strength;
  c.category = category;
  for (const auto& tag : tags) {
    for (int i = 0; i < static_cast<int>(config.vocab.size()); ++i) {
      if (config.vocab[i] == tag && static_cast<int>(c.tokens.size()) < kMaxConditioningTokens) {
        c.tokens.push_back(i);
        break;
      }
    }
  }
  return c;
}

PmpLayout make_layout(const PmpConfig& c) {
  check_config(c);
  PmpLayout l;
  auto add = [&](std::string name, int rows, int cols) {
    l.tensors.push_back(TensorInfo{std::move(name), rows, cols, l.parameter_count});
    l.parameter_count += static_cast<Eigen::Index>(rows) * cols;
    return static_cast<int>(l.tensors.size()) - 1;
  };
  const int d = c.model_dim;
  l.input_w = add("input.w", c.input_dim(), d);
  l.input_b = add("input.b", 1, d);
  l.positions = add("positions", c.max_frames, d);
  l.tokens = add("tokens", static_cast<int>(c.vocab.size()), d);
  l.strength_w = add("strength.w", kStrengthFeatures, d);
  l.strength_b = add("strength.b", 1, d);
  auto attention = [&](const std::string& p) {
    PmpLayout::Attention a;
    a.wq = add(p + ".wq", d, d);
    a.wk = add(p + ".wk", d, d);
    a.wv = add(p + ".wv", d, d);
    a.wo = add(p + ".wo", d, d);
    a.bq = add(p + ".bq", 1, d);
    a.bk = add(p + ".bk", 1, d);
    a.bv = add(p + ".bv", 1, d);
    a.bo = add(p + ".bo", 1, d);
    return a;
  };
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "layer" + std::to_string(i);
    PmpLayout::Layer layer;
    layer.ln1_gamma = add(p + ".ln1.gamma", 1, d);
    layer.ln1_beta = add(p + ".ln1.beta", 1, d);
    layer.self = attention(p + ".self");
    layer.ln2_gamma = add(p + ".ln2.gamma", 1, d);
    layer.ln2_beta = add(p + ".ln2.beta", 1, d);
    layer.cross = attention(p + ".cross");
    layer.ln3_gamma = add(p + ".ln3.gamma", 1, d);
    layer.ln3_beta = add(p + ".ln3.beta", 1, d);
    layer.ffn_w1 = add(p + ".ffn.w1", d, c.ffn_dim);
    layer.ffn_b1 = add(p + ".ffn.b1", 1, c.ffn_dim);
    layer.ffn_w2 = add(p + ".ffn.w2", c.ffn_dim, d);
    layer.ffn_b2 = add(p + ".ffn.b2", 1, d);
    l.layers.push_back(layer);
  }
  l.output_w = add("output.w", d, c.max_pose_dim);
  l.output_b = add("output.b", 1, c.max_pose_dim);
  return l;
}

PmpModel::PmpModel(PmpConfig config)
    : config_(std::move(config)), layout_(make_layout(config_)), params_(Eigen::VectorXd::Zero(layout_.parameter_count)) {}

Eigen::Map<Eigen::MatrixXd> PmpModel::tensor(int index) {
  const TensorInfo& t = layout_.tensors.at(index);
  return {params_.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const Eigen::MatrixXd> PmpModel::tensor(int index) const {
  const TensorInfo& t = layout_.tensors.at(index);
  return {params_.data() + t.offset, t.rows, t.cols};
}

PmpModel pmp_init(const PmpConfig& config, std::uint64_t seed) {
  PmpModel m(config);
  const PmpLayout& l = m.layout();
  Rng rng(seed);
  std::vector<bool> gain(l.tensors.size(), false);
  for (const auto& layer : l.layers)
    for (int g : {layer.ln1_gamma, layer.ln2_gamma, layer.ln3_gamma}) gain[g] = true;
  const double embed = 1.0 / std::sqrt(static_cast<double>(config.model_dim));
  for (int i = 0; i < static_cast<int>(l.tensors.size()); ++i) {
    const TensorInfo& t = l.tensors[i];
    auto w = m.tensor(i);
    if (gain[i]) {
      w.setOnes();
      continue;
    }
    double scale = 0.0;
    if (i == l.positions || i == l.tokens) scale = embed;
    else if (t.rows > 1) scale = 1.0 / std::sqrt(static_cast<double>(t.rows));  // fan_in
    if (i == l.output_w) scale *= kOutputInitGain;  // start near the identity map
    if (scale == 0.0) continue;  // biases and layer-norm offsets start at zero
    std::uniform_real_distribution<double> u(-scale, scale);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
  }
  return m;
}

namespace {

template <typename T>
struct Tensors {
  using M = std::conditional_t<std::is_const_v<T>, const Eigen::MatrixXd, Eigen::MatrixXd>;
  using R = std::conditional_t<std::is_const_v<T>, const Eigen::RowVectorXd, Eigen::RowVectorXd>;
  T* base;
  const PmpLayout* layout;

  Eigen::Map<M> mat(int i) const {
    const TensorInfo& t = layout->tensors[i];
    return {base + t.offset, t.rows, t.cols};
  }
  Eigen::Map<R> row(int i) const {
    const TensorInfo& t = layout->tensors[i];
    return {base + t.offset, t.rows * t.cols};
  }
};

using Params = Tensors<const double>;
using Grads = Tensors<double>;

struct Span {
  int offset;
  int rows;
};

struct Item {
  Span frames;
  Span memory;
  int pose_dim;
  double scale = 1.0;  // RMS of the time-centered input
};

struct LnCache {
  RM y, xhat;
  Eigen::VectorXd rstd;
};

struct AttnCache {
  RM q, k, v, o;
  std::vector<RM> p;  // item-major, then head
};

struct LayerCache {
  LnCache ln1, ln2, ln3;
  AttnCache self, cross;
  RM u, t, g;  // pre-activation, tanh cache, activation
};

struct Pass {
  std::vector<Item> items;
  std::vector<std::vector<int>> tokens;
  RM x0;   // normalized padded input, means, category one-hot, log scale
  RM phi;  // strength features, one row per item
  RM mem;  // conditioning memory, stacked per item
  std::vector<LayerCache> layers;
  RM h;    // final hidden state
  RM delta;  // rescaled network output, N x max_pose_dim
  RM out;    // delta plus the raw input
};

Eigen::RowVectorXd strength_features(double s) {
  Eigen::RowVectorXd phi(kStrengthFeatures);
  const int half = kStrengthFeatures / 2;
  for (int k = 0; k < half; ++k) {
    const double w = std::ldexp(1.0, k) * s;
    phi[k] = std::sin(w);
    phi[half + k] = std::cos(w);
  }
  return phi;
}

void check_input(const PmpConfig& config, int frames, int pose_dim, const Conditioning& cond) {
  if (frames > config.max_frames)
    fail(ErrorCode::TooManyFrames,
         std::to_string(frames) + " frames exceed max_frames " + std::to_string(config.max_frames));
  if (frames < 1) fail(ErrorCode::SequenceTooShort, "PMP input has no frames");
  if (pose_dim > config.max_pose_dim)
    fail(ErrorCode::PoseDimExceedsMax,
         "pose_dim " + std::to_string(pose_dim) + " exceeds max_pose_dim " + std::to_string(config.max_pose_dim));
  if (static_cast<int>(cond.tokens.size()) > kMaxConditioningTokens)
    fail(ErrorCode::InvalidConfig, "too many conditioning tokens");
  for (int t : cond.tokens)
    if (t < 0 || t >= static_cast<int>(config.vocab.size()))
      fail(ErrorCode::InvalidConfig, "token index " + std::to_string(t) + " outside the vocabulary");
  if (!(cond.strength >= 0.0) || !std::isfinite(cond.strength))
    fail(ErrorCode::InvalidConfig, "motion strength must be finite and non-negative");
}

void layer_norm(const RM& x, const Params& p, int gamma, int beta, LnCache& c) {
  nn::layer_norm<double>(x, p.row(gamma), p.row(beta), c.y, c.xhat, c.rstd);
}

RM layer_norm_backward(const RM& dy, const LnCache& c, const Params& p, const Grads& g, int gamma, int beta) {
  return nn::layer_norm_backward<double>(dy, c.xhat, c.rstd, p.row(gamma), g.row(gamma), g.row(beta));
}

RM attention_forward(const RM& xq, const RM& xkv, const std::vector<Item>& items, bool self, int heads,
                     const PmpLayout::Attention& a, const Params& p, AttnCache& c) {
  c.q = (xq * p.mat(a.wq)).rowwise() + p.row(a.bq);
  c.k = (xkv * p.mat(a.wk)).rowwise() + p.row(a.bk);
  c.v = (xkv * p.mat(a.wv)).rowwise() + p.row(a.bv);
  const int d = static_cast<int>(xq.cols());
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.o.resize(xq.rows(), d);
  c.p.clear();
  c.p.reserve(items.size() * heads);
  for (const Item& it : items) {
    const Span qs = it.frames;
    const Span ks = self ? it.frames : it.memory;
    for (int h = 0; h < heads; ++h) {
      RM s = scale * c.q.block(qs.offset, h * dh, qs.rows, dh) * c.k.block(ks.offset, h * dh, ks.rows, dh).transpose();
      nn::softmax_rows(s);
      c.o.block(qs.offset, h * dh, qs.rows, dh) = s * c.v.block(ks.offset, h * dh, ks.rows, dh);
      c.p.push_back(std::move(s));
    }
  }
  return (c.o * p.mat(a.wo)).rowwise() + p.row(a.bo);
}

// Returns d(xq); adds d(xkv) into dxkv.
RM attention_backward(const RM& dout, const RM& xq, const RM& xkv, const std::vector<Item>& items, bool self,
                      int heads, const PmpLayout::Attention& a, const Params& p, const Grads& g, const AttnCache& c,
                      RM& dxkv) {
  g.mat(a.wo).noalias() += c.o.transpose() * dout;
  g.row(a.bo) += dout.colwise().sum();
  const RM d_o = dout * p.mat(a.wo).transpose();
  const int d = static_cast<int>(xq.cols());
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  RM dq = RM::Zero(xq.rows(), d);
  RM dk = RM::Zero(xkv.rows(), d);
  RM dv = RM::Zero(xkv.rows(), d);
  int idx = 0;
  for (const Item& it : items) {
    const Span qs = it.frames;
    const Span ks = self ? it.frames : it.memory;
    for (int h = 0; h < heads; ++h) {
      const RM& pr = c.p[idx++];
      const auto doh = d_o.block(qs.offset, h * dh, qs.rows, dh);
      const RM dp = doh * c.v.block(ks.offset, h * dh, ks.rows, dh).transpose();
      dv.block(ks.offset, h * dh, ks.rows, dh).noalias() += pr.transpose() * doh;
      const RM ds = scale * nn::softmax_rows_backward(pr, dp);
      dq.block(qs.offset, h * dh, qs.rows, dh).noalias() = ds * c.k.block(ks.offset, h * dh, ks.rows, dh);
      dk.block(ks.offset, h * dh, ks.rows, dh).noalias() += ds.transpose() * c.q.block(qs.offset, h * dh, qs.rows, dh);
    }
  }
  g.mat(a.wq).noalias() += xq.transpose() * dq;
  g.row(a.bq) += dq.colwise().sum();
  g.mat(a.wk).noalias() += xkv.transpose() * dk;
  g.row(a.bk) += dk.colwise().sum();
  g.mat(a.wv).noalias() += xkv.transpose() * dv;
  g.row(a.bv) += dv.colwise().sum();
  dxkv.noalias() += dk * p.mat(a.wk).transpose();
  dxkv.noalias() += dv * p.mat(a.wv).transpose();
  return dq * p.mat(a.wq).transpose();
}

struct Sample {
  const Eigen::MatrixXd* frames;
  const Conditioning* cond;
};

Pass forward(const PmpModel& model, const std::vector<Sample>& samples) {
  const PmpConfig& cfg = model.config();
  const PmpLayout& l = model.layout();
  const Params p{model.parameters().data(), &l};
  const int d = cfg.model_dim;
  Pass s;
  int n = 0;
  int m = 0;
  for (const Sample& smp : samples) {
    const int f = static_cast<int>(smp.frames->rows());
    const int pd = static_cast<int>(smp.frames->cols());
    check_input(cfg, f, pd, *smp.cond);
    const int mem_rows = static_cast<int>(smp.cond->tokens.size()) + 1;
    s.items.push_back(Item{{n, f}, {m, mem_rows}, pd, 1.0});
    s.tokens.push_back(smp.cond->tokens);
    n += f;
    m += mem_rows;
  }

  s.x0 = RM::Zero(n, cfg.input_dim());
  s.phi.resize(static_cast<Eigen::Index>(samples.size()), kStrengthFeatures);
  s.mem.resize(m, d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Item& it = s.items[i];
    const Eigen::RowVectorXd mean = samples[i].frames->colwise().mean();
    const Eigen::MatrixXd centered = samples[i].frames->rowwise() - mean;
    it.scale = std::max(std::sqrt(centered.squaredNorm() / static_cast<double>(centered.size())), kMinInputScale);
    s.x0.block(it.frames.offset, 0, it.frames.rows, it.pose_dim) = centered / it.scale;
    s.x0.block(it.frames.offset, cfg.max_pose_dim, it.frames.rows, it.pose_dim) = mean.replicate(it.frames.rows, 1);
    s.x0.block(it.frames.offset, 2 * cfg.max_pose_dim + category_index(samples[i].cond->category), it.frames.rows, 1)
        .setOnes();
    s.x0.block(it.frames.offset, cfg.input_dim() - 1, it.frames.rows, 1).setConstant(std::log(it.scale));
    s.phi.row(i) = strength_features(samples[i].cond->strength);
    for (std::size_t k = 0; k < s.tokens[i].size(); ++k)
      s.mem.row(it.memory.offset + k) = p.mat(l.tokens).row(s.tokens[i][k]);
    s.mem.row(it.memory.offset + it.memory.rows - 1) = s.phi.row(i) * p.mat(l.strength_w) + p.row(l.strength_b);
  }

  RM h = (s.x0 * p.mat(l.input_w)).rowwise() + p.row(l.input_b);
  for (const Item& it : s.items) h.middleRows(it.frames.offset, it.frames.rows) += p.mat(l.positions).topRows(it.frames.rows);

  s.layers.resize(l.layers.size());
  for (std::size_t li = 0; li < l.layers.size(); ++li) {
    const auto& lw = l.layers[li];
    LayerCache& c = s.layers[li];
    layer_norm(h, p, lw.ln1_gamma, lw.ln1_beta, c.ln1);
    h += attention_forward(c.ln1.y, c.ln1.y, s.items, true, cfg.heads, lw.self, p, c.self);
    layer_norm(h, p, lw.ln2_gamma, lw.ln2_beta, c.ln2);
    h += attention_forward(c.ln2.y, s.mem, s.items, false, cfg.heads, lw.cross, p, c.cross);
    layer_norm(h, p, lw.ln3_gamma, lw.ln3_beta, c.ln3);
    c.u = (c.ln3.y * p.mat(lw.ffn_w1)).rowwise() + p.row(lw.ffn_b1);
    c.t = c.u.unaryExpr([](double x) { return std::tanh(nn::gelu_inner(x)); });
    c.g = c.u.binaryExpr(c.t, [](double x, double t) { return nn::gelu_from_tanh(x, t); });
    h.noalias() += c.g * p.mat(lw.ffn_w2);
    h.rowwise() += p.row(lw.ffn_b2);
  }
  s.delta = (h * p.mat(l.output_w)).rowwise() + p.row(l.output_b);
  for (const Item& it : s.items) s.delta.middleRows(it.frames.offset, it.frames.rows) *= it.scale;
  s.out = s.delta;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Item& it = s.items[i];
    s.out.block(it.frames.offset, 0, it.frames.rows, it.pose_dim) += *samples[i].frames;
  }
  s.h = std::move(h);
  return s;
}

void backward(const PmpModel& model, const Pass& s, const RM& dout, Eigen::VectorXd& grad) {
  const PmpConfig& cfg = model.config();
  const PmpLayout& l = model.layout();
  const Params p{model.parameters().data(), &l};
  const Grads g{grad.data(), &l};

  RM dnet = dout;
  for (const Item& it : s.items) dnet.middleRows(it.frames.offset, it.frames.rows) *= it.scale;
  g.mat(l.output_w).noalias() += s.h.transpose() * dnet;
  g.row(l.output_b) += dnet.colwise().sum();
  RM dh = dnet * p.mat(l.output_w).transpose();
  RM dmem = RM::Zero(s.mem.rows(), s.mem.cols());

  for (int li = static_cast<int>(l.layers.size()) - 1; li >= 0; --li) {
    const auto& lw = l.layers[li];
    const LayerCache& c = s.layers[li];

    g.mat(lw.ffn_w2).noalias() += c.g.transpose() * dh;
    g.row(lw.ffn_b2) += dh.colwise().sum();
    RM du = dh * p.mat(lw.ffn_w2).transpose();
    du.array() *= c.u.binaryExpr(c.t, [](double x, double t) { return nn::gelu_grad_from_tanh(x, t); }).array();
    g.mat(lw.ffn_w1).noalias() += c.ln3.y.transpose() * du;
    g.row(lw.ffn_b1) += du.colwise().sum();
    dh += layer_norm_backward(du * p.mat(lw.ffn_w1).transpose(), c.ln3, p, g, lw.ln3_gamma, lw.ln3_beta);

    RM dln2 = attention_backward(dh, c.ln2.y, s.mem, s.items, false, cfg.heads, lw.cross, p, g, c.cross, dmem);
    dh += layer_norm_backward(dln2, c.ln2, p, g, lw.ln2_gamma, lw.ln2_beta);

    RM dkv = RM::Zero(dh.rows(), dh.cols());
    RM dln1 = attention_backward(dh, c.ln1.y, c.ln1.y, s.items, true, cfg.heads, lw.self, p, g, c.self, dkv);
    dln1 += dkv;
    dh += layer_norm_backward(dln1, c.ln1, p, g, lw.ln1_gamma, lw.ln1_beta);
  }

  g.mat(l.input_w).noalias() += s.x0.transpose() * dh;
  g.row(l.input_b) += dh.colwise().sum();
  auto dpos = g.mat(l.positions);
  auto dtok = g.mat(l.tokens);
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const Item& it = s.items[i];
    dpos.topRows(it.frames.rows) += dh.middleRows(it.frames.offset, it.frames.rows);
    for (std::size_t k = 0; k < s.tokens[i].size(); ++k) dtok.row(s.tokens[i][k]) += dmem.row(it.memory.offset + k);
    const auto dm = dmem.row(it.memory.offset + it.memory.rows - 1);
    g.mat(l.strength_w).noalias() += s.phi.row(i).transpose() * dm;
    g.row(l.strength_b) += dm;
  }
}

std::vector<Sample> samples_of(std::span<const TrainingExample> batch) {
  if (batch.empty()) fail(ErrorCode::EmptyBatch, "loss needs at least one example");
  std::vector<Sample> out;
  for (const auto& ex : batch) {
    if (ex.input.rows() != ex.target.rows() || ex.input.cols() != ex.target.cols())
      fail(ErrorCode::DimensionMismatch, "input and target shapes differ");
    out.push_back(Sample{&ex.input, &ex.cond});
  }
  return out;
}

// RMS error of the input against its target, floored at a fraction of the input scale.
std::vector<double> error_units(const Pass& s, std::span<const TrainingExample> batch) {
  std::vector<double> units;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double rms = std::sqrt((batch[i].input - batch[i].target).squaredNorm() / static_cast<double>(batch[i].input.size()));
    units.push_back(std::max(rms, kMinErrorFraction * s.items[i].scale));
  }
  return units;
}

// Residual over the un-padded channels in units of each example's input error, zero
// elsewhere; returns the entry count.
double residual(const Pass& s, std::span<const TrainingExample> batch, const std::vector<double>& units, RM& r) {
  r = RM::Zero(s.out.rows(), s.out.cols());
  double count = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Item& it = s.items[i];
    r.block(it.frames.offset, 0, it.frames.rows, it.pose_dim) =
        (s.delta.block(it.frames.offset, 0, it.frames.rows, it.pose_dim) + (batch[i].input - batch[i].target)) / units[i];
    count += static_cast<double>(it.frames.rows) * it.pose_dim;
  }
  return count;
}

}  // namespace

Eigen::MatrixXd pmp_forward(const PmpModel& model, const Eigen::MatrixXd& frames, const Conditioning& cond) {
  const Pass s = forward(model, {Sample{&frames, &cond}});
  return s.out;
}

MotionSequence pmp_refine(const PmpModel& model, const MotionSequence& seq, const Conditioning& cond) {
  check_input(model.config(), seq.length(), seq.pose_dim(), cond);
  MotionSequence out = seq;
  for (int k = 0; k < model.config().refine_iterations; ++k)
    out.frames = pmp_forward(model, out.frames, cond).leftCols(seq.pose_dim());
  return out;
}

LossAndGradient pmp_loss(const PmpModel& model, std::span<const TrainingExample> batch) {
  const Pass s = forward(model, samples_of(batch));
  RM r;
  const std::vector<double> units = error_units(s, batch);
  const double count = residual(s, batch, units, r);
  LossAndGradient out;
  out.loss = r.squaredNorm() / count;
  out.gradient = Eigen::VectorXd::Zero(model.parameters().size());
  RM dout = (2.0 / count) * r;
  for (std::size_t i = 0; i < s.items.size(); ++i)
    dout.middleRows(s.items[i].frames.offset, s.items[i].frames.rows) /= units[i];
  backward(model, s, dout, out.gradient);
  return out;
}

namespace {

double residual_value(const PmpModel& model, std::span<const TrainingExample> batch, RM& r) {
  const Pass s = forward(model, samples_of(batch));
  return residual(s, batch, error_units(s, batch), r);
}

}  // namespace

double pmp_loss_value(const PmpModel& model, std::span<const TrainingExample> batch) {
  RM r;
  const double count = residual_value(model, batch, r);
  return r.squaredNorm() / count;
}

GradCheckResult grad_check(const PmpModel& model, std::span<const TrainingExample> batch, double epsilon, int samples,
                           std::uint64_t seed) {
  const LossAndGradient analytic = pmp_loss(model, batch);
  PmpModel probe = model;
  const auto& tensors = model.tensors();
  Rng rng(seed);
  GradCheckResult result;
  for (int k = 0; k < samples; ++k) {
    const TensorInfo& t = tensors[uniform_int(rng, 0, static_cast<int>(tensors.size()) - 1)];
    const Eigen::Index idx =
        t.offset + static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<int>(t.size()) - 1));
    double& w = probe.parameters()[idx];
    const double saved = w;
    const double hi = saved + epsilon, lo = saved - epsilon;
    w = hi;
    RM plus;
    const double count = residual_value(probe, batch, plus);
    w = lo;
    RM minus;
    residual_value(probe, batch, minus);
    w = saved;
    // Difference of the squared residuals taken entrywise, which cancels far less than
    // subtracting two summed losses.
    const double numeric = (plus - minus).cwiseProduct(plus + minus).sum() / count / (hi - lo);
    const double a = analytic.gradient[idx];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    ++result.checked;
    if (rel > result.max_relative_error || result.worst_tensor.empty()) {
      if (rel >= result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = t.name;
      }
    }
  }
  return result;
}

}  // namespace revision
