#include "hyponli/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hyponli/error.hpp"
#include "hyponli/rng.hpp"

namespace hyponli {

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::bag ? "bag" : "birnn-maxpool";
}

EncoderKind encoder_kind_from_string(std::string_view name) {
  if (name == "bag") return EncoderKind::bag;
  if (name == "birnn-maxpool" || name == "birnn") return EncoderKind::birnn_maxpool;
  throw ConfigError(fmt::format("unknown encoder '{}' (expected bag or birnn-maxpool)", name));
}

std::size_t ModelConfig::encoding_width() const {
  return encoder == EncoderKind::bag ? embedding_dim : 2 * hidden_dim;
}

void ModelConfig::validate() const {
  if (embedding_dim < 1 || hidden_dim < 1 || mlp_hidden < 1) {
    throw ConfigError("model dimensions must be at least 1");
  }
  if (n_labels < 2 || n_labels > 3) throw ConfigError("n_labels must be 2 or 3");
}

namespace {

template <class Params, class Block, class Span>
std::vector<Block> collect_blocks(Params& p) {
  std::vector<Block> out;
  auto add = [&out](const char* name, auto& m) {
    if (m.size() > 0) out.push_back(Block{name, Span(m.data(), static_cast<std::size_t>(m.size()))});
  };
  add("embeddings", p.embeddings);
  add("forward.input", p.forward.input);
  add("forward.recurrent", p.forward.recurrent);
  add("forward.bias", p.forward.bias);
  add("backward.input", p.backward.input);
  add("backward.recurrent", p.backward.recurrent);
  add("backward.bias", p.backward.bias);
  add("mlp.hidden.weights", p.hidden_weights);
  add("mlp.hidden.bias", p.hidden_bias);
  add("mlp.output.weights", p.output_weights);
  add("mlp.output.bias", p.output_bias);
  return out;
}

LstmWeights zeros_like(const LstmWeights& w) {
  return LstmWeights{Eigen::MatrixXd::Zero(w.input.rows(), w.input.cols()),
                     Eigen::MatrixXd::Zero(w.recurrent.rows(), w.recurrent.cols()),
                     Eigen::VectorXd::Zero(w.bias.size())};
}

template <class Derived>
void fill_uniform(Eigen::PlainObjectBase<Derived>& m, Rng& rng, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-step values of one recurrent direction, columns in processing order.
struct LstmTrace {
  Eigen::MatrixXd gates;  // 4H x T, activated (i, f, o, g)
  Eigen::MatrixXd cell;   // H x T
  Eigen::MatrixXd hidden; // H x T
};

LstmTrace run_lstm(const LstmWeights& w, const Eigen::MatrixXd& inputs, bool reversed) {
  const Eigen::Index hdim = w.recurrent.cols();
  const Eigen::Index steps = inputs.cols();
  LstmTrace tr{Eigen::MatrixXd(4 * hdim, steps), Eigen::MatrixXd(hdim, steps),
               Eigen::MatrixXd(hdim, steps)};
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hdim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(hdim);
  Eigen::VectorXd z(4 * hdim);
  for (Eigen::Index s = 0; s < steps; ++s) {
    z.noalias() = w.input * inputs.col(s);
    z.noalias() += w.recurrent * h;
    z += w.bias;
    auto gates = tr.gates.col(s);
    for (Eigen::Index k = 0; k < 3 * hdim; ++k) gates(k) = sigmoid(z(k));
    for (Eigen::Index k = 3 * hdim; k < 4 * hdim; ++k) gates(k) = std::tanh(z(k));
    c = gates.segment(hdim, hdim).cwiseProduct(c) +
        gates.segment(0, hdim).cwiseProduct(gates.segment(3 * hdim, hdim));
    h = gates.segment(2 * hdim, hdim).cwiseProduct(c.array().tanh().matrix());
    if (!h.allFinite() || !c.allFinite()) {
      const Eigen::Index token = reversed ? steps - 1 - s : s;
      throw NumericalError(fmt::format("non-finite {} recurrent state at token index {}",
                                       reversed ? "backward" : "forward", token));
    }
    tr.cell.col(s) = c;
    tr.hidden.col(s) = h;
  }
  return tr;
}

// Backpropagation through time. dh holds the loss gradient w.r.t. each
// step's hidden state (processing order); dx receives input gradients.
void backprop_lstm(const LstmWeights& w, const Eigen::MatrixXd& inputs, const LstmTrace& tr,
                   const Eigen::MatrixXd& dh, LstmWeights& grad, Eigen::MatrixXd* dx) {
  const Eigen::Index hdim = w.recurrent.cols();
  const Eigen::Index steps = inputs.cols();
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hdim);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hdim);
  Eigen::VectorXd dz(4 * hdim);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(hdim);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const auto gates = tr.gates.col(s);
    const auto i = gates.segment(0, hdim).array();
    const auto f = gates.segment(hdim, hdim).array();
    const auto o = gates.segment(2 * hdim, hdim).array();
    const auto g = gates.segment(3 * hdim, hdim).array();
    const Eigen::ArrayXd tc = tr.cell.col(s).array().tanh();
    const Eigen::ArrayXd c_prev = s > 0 ? Eigen::ArrayXd(tr.cell.col(s - 1).array()) : zero.array();

    const Eigen::ArrayXd dh_total = dh.col(s).array() + dh_next.array();
    const Eigen::ArrayXd dc = dc_next.array() + dh_total * o * (1.0 - tc.square());
    dz.segment(0, hdim) = (dc * g * i * (1.0 - i)).matrix();
    dz.segment(hdim, hdim) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.segment(2 * hdim, hdim) = (dh_total * tc * o * (1.0 - o)).matrix();
    dz.segment(3 * hdim, hdim) = (dc * i * (1.0 - g.square())).matrix();
    dc_next = (dc * f).matrix();

    grad.input.noalias() += dz * inputs.col(s).transpose();
    if (s > 0) grad.recurrent.noalias() += dz * tr.hidden.col(s - 1).transpose();
    grad.bias += dz;
    dh_next.noalias() = w.recurrent.transpose() * dz;
    if (dx) dx->col(s).noalias() = w.input.transpose() * dz;
  }
}

Eigen::MatrixXd gather_inputs(const TokenIds& ids, const ModelParameters& params) {
  Eigen::MatrixXd x(params.embeddings.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t t = 0; t < ids.size(); ++t) x.col(static_cast<Eigen::Index>(t)) = params.embeddings.col(ids[t]);
  return x;
}

// Everything the backward pass needs from one example's forward pass.
struct Forward {
  Eigen::MatrixXd inputs;
  LstmTrace fwd;
  LstmTrace bwd;
  std::vector<Eigen::Index> argmax;  // per encoding dim, position index
  Eigen::VectorXd encoding;
  Eigen::VectorXd hidden;  // tanh activations
  Eigen::VectorXd logits;
};

void birnn_forward(const TokenIds& ids, const ModelParameters& params, Forward& fw) {
  const Eigen::Index hdim = params.forward.recurrent.cols();
  const Eigen::Index steps = static_cast<Eigen::Index>(ids.size());
  fw.encoding = Eigen::VectorXd::Zero(2 * hdim);
  fw.argmax.assign(static_cast<std::size_t>(2 * hdim), 0);
  if (steps == 0) return;
  fw.inputs = gather_inputs(ids, params);
  fw.fwd = run_lstm(params.forward, fw.inputs, false);
  fw.bwd = run_lstm(params.backward, fw.inputs.rowwise().reverse(), true);
  for (Eigen::Index j = 0; j < 2 * hdim; ++j) {
    auto value_at = [&](Eigen::Index t) {
      return j < hdim ? fw.fwd.hidden(j, t) : fw.bwd.hidden(j - hdim, steps - 1 - t);
    };
    Eigen::Index best = 0;
    double best_value = value_at(0);
    for (Eigen::Index t = 1; t < steps; ++t) {
      const double v = value_at(t);
      if (v > best_value) {
        best = t;
        best_value = v;
      }
    }
    fw.argmax[static_cast<std::size_t>(j)] = best;
    fw.encoding(j) = best_value;
  }
}

void head_forward(const ModelParameters& params, Forward& fw) {
  fw.hidden = (params.hidden_weights * fw.encoding + params.hidden_bias).array().tanh().matrix();
  fw.logits = params.output_weights * fw.hidden + params.output_bias;
}

Forward forward(const TokenIds& ids, const ModelParameters& params, const ModelConfig& config) {
  Forward fw;
  if (config.encoder == EncoderKind::bag) {
    fw.encoding = encode_bag(ids, params);
  } else {
    birnn_forward(ids, params, fw);
  }
  head_forward(params, fw);
  return fw;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp().matrix();
  return p / p.sum();
}

double nll(const Eigen::VectorXd& logits, int label) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label);
}

void check_label(int label, std::size_t n_labels) {
  if (label < 0 || static_cast<std::size_t>(label) >= n_labels) {
    throw ShapeError(fmt::format("label index {} outside [0, {})", label, n_labels));
  }
}

}  // namespace

std::vector<ParameterBlock> ModelParameters::blocks() {
  return collect_blocks<ModelParameters, ParameterBlock, std::span<double>>(*this);
}

std::vector<ConstParameterBlock> ModelParameters::blocks() const {
  return collect_blocks<const ModelParameters, ConstParameterBlock, std::span<const double>>(*this);
}

std::size_t ModelParameters::size() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.values.size();
  return n;
}

bool ModelParameters::all_finite() const {
  for (const auto& b : blocks()) {
    for (double v : b.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ModelParameters ModelParameters::zeros_like(const ModelParameters& other) {
  ModelParameters z;
  z.embeddings = Eigen::MatrixXd::Zero(other.embeddings.rows(), other.embeddings.cols());
  z.forward = hyponli::zeros_like(other.forward);
  z.backward = hyponli::zeros_like(other.backward);
  z.hidden_weights = Eigen::MatrixXd::Zero(other.hidden_weights.rows(), other.hidden_weights.cols());
  z.hidden_bias = Eigen::VectorXd::Zero(other.hidden_bias.size());
  z.output_weights = Eigen::MatrixXd::Zero(other.output_weights.rows(), other.output_weights.cols());
  z.output_bias = Eigen::VectorXd::Zero(other.output_bias.size());
  return z;
}

ModelParameters init_parameters(const ModelConfig& config, const EmbeddingTable& table) {
  config.validate();
  if (table.dimension() != config.embedding_dim) {
    throw ConfigError(fmt::format("embedding table has dimension {}, model expects {}",
                                  table.dimension(), config.embedding_dim));
  }
  const auto dim = static_cast<Eigen::Index>(config.embedding_dim);
  const auto hdim = static_cast<Eigen::Index>(config.hidden_dim);
  const auto mdim = static_cast<Eigen::Index>(config.mlp_hidden);
  const auto ldim = static_cast<Eigen::Index>(config.n_labels);
  const auto width = static_cast<Eigen::Index>(config.encoding_width());

  ModelParameters p;
  p.embeddings.resize(dim, static_cast<Eigen::Index>(table.size()) + 1);
  for (std::size_t v = 0; v < table.size(); ++v) {
    const auto row = table.row(v);
    for (Eigen::Index d = 0; d < dim; ++d) p.embeddings(d, static_cast<Eigen::Index>(v)) = row[static_cast<std::size_t>(d)];
  }
  for (Eigen::Index d = 0; d < dim; ++d) {
    p.embeddings(d, static_cast<Eigen::Index>(table.size())) = table.oov()[static_cast<std::size_t>(d)];
  }

  Rng rng(config.seed);
  if (config.encoder == EncoderKind::birnn_maxpool) {
    for (LstmWeights* w : {&p.forward, &p.backward}) {
      w->input.resize(4 * hdim, dim);
      w->recurrent.resize(4 * hdim, hdim);
      w->bias.resize(4 * hdim);
      fill_uniform(w->input, rng, config.embedding_dim);
      fill_uniform(w->recurrent, rng, config.hidden_dim);
      fill_uniform(w->bias, rng, config.hidden_dim);
    }
  }
  p.hidden_weights.resize(mdim, width);
  p.hidden_bias.resize(mdim);
  p.output_weights.resize(ldim, mdim);
  p.output_bias.resize(ldim);
  fill_uniform(p.hidden_weights, rng, config.encoding_width());
  fill_uniform(p.hidden_bias, rng, config.encoding_width());
  fill_uniform(p.output_weights, rng, config.mlp_hidden);
  fill_uniform(p.output_bias, rng, config.mlp_hidden);
  return p;
}

TokenIds token_ids(const TokenizedSentence& tokens, const Vocabulary& vocab) {
  TokenIds ids;
  ids.reserve(tokens.size());
  const int oov = static_cast<int>(vocab.size());
  for (const auto& tok : tokens) {
    auto idx = vocab.find(tok);
    ids.push_back(idx ? static_cast<int>(*idx) : oov);
  }
  return ids;
}

Eigen::VectorXd encode_bag(const TokenizedSentence& tokens, const EmbeddingTable& embeddings) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(embeddings.dimension()));
  if (tokens.empty()) return sum;
  for (const auto& tok : tokens) {
    const auto v = embeddings.lookup(tok);
    sum += Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return sum / static_cast<double>(tokens.size());
}

Eigen::VectorXd encode_bag(const TokenIds& ids, const ModelParameters& params) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.embeddings.rows());
  if (ids.empty()) return sum;
  for (int id : ids) sum += params.embeddings.col(id);
  return sum / static_cast<double>(ids.size());
}

Eigen::VectorXd encode_birnn_maxpool(const TokenIds& ids, const ModelParameters& params) {
  if (params.forward.recurrent.size() == 0) throw ShapeError("parameters carry no recurrent weights");
  Forward fw;
  birnn_forward(ids, params, fw);
  return fw.encoding;
}

Eigen::VectorXd encode(const TokenIds& ids, const ModelParameters& params, const ModelConfig& config) {
  return config.encoder == EncoderKind::bag ? encode_bag(ids, params) : encode_birnn_maxpool(ids, params);
}

Prediction classify(const Eigen::VectorXd& encoding, const ModelParameters& params) {
  if (encoding.size() != params.hidden_weights.cols()) {
    throw ShapeError(fmt::format("encoding has length {}, classifier expects {}", encoding.size(),
                                 params.hidden_weights.cols()));
  }
  const Eigen::VectorXd hidden =
      (params.hidden_weights * encoding + params.hidden_bias).array().tanh().matrix();
  const Eigen::VectorXd logits = params.output_weights * hidden + params.output_bias;
  const Eigen::VectorXd probs = softmax(logits);
  Prediction p;
  p.logits.assign(logits.data(), logits.data() + logits.size());
  p.probabilities.assign(probs.data(), probs.data() + probs.size());
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits(k) > logits(best)) best = k;
  }
  p.label.index = static_cast<int>(best);
  return p;
}

double batch_loss(std::span<const Example> batch, const ModelParameters& params,
                  const ModelConfig& config) {
  if (batch.empty()) throw ShapeError("empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    check_label(ex.label, config.n_labels);
    total += nll(forward(ex.ids, params, config).logits, ex.label);
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
  return loss;
}

LossAndGradients loss_and_gradients(std::span<const Example> batch, const ModelParameters& params,
                                    const ModelConfig& config) {
  if (batch.empty()) throw ShapeError("empty batch");
  LossAndGradients out{0.0, ModelParameters::zeros_like(params)};
  Gradients& grad = out.gradients;
  if (!config.finetune_embeddings) grad.embeddings.resize(0, 0);

  const double scale = 1.0 / static_cast<double>(batch.size());
  const Eigen::Index hdim = params.forward.recurrent.cols();
  for (const auto& ex : batch) {
    check_label(ex.label, config.n_labels);
    const Forward fw = forward(ex.ids, params, config);
    out.loss += nll(fw.logits, ex.label);

    Eigen::VectorXd dlogits = softmax(fw.logits);
    dlogits(ex.label) -= 1.0;
    dlogits *= scale;
    grad.output_weights.noalias() += dlogits * fw.hidden.transpose();
    grad.output_bias += dlogits;
    const Eigen::VectorXd dhidden =
        ((params.output_weights.transpose() * dlogits).array() * (1.0 - fw.hidden.array().square())).matrix();
    grad.hidden_weights.noalias() += dhidden * fw.encoding.transpose();
    grad.hidden_bias += dhidden;
    const Eigen::VectorXd dencoding = params.hidden_weights.transpose() * dhidden;

    const Eigen::Index steps = static_cast<Eigen::Index>(ex.ids.size());
    if (steps == 0) continue;

    if (config.encoder == EncoderKind::bag) {
      if (config.finetune_embeddings) {
        const Eigen::VectorXd share = dencoding / static_cast<double>(steps);
        for (int id : ex.ids) grad.embeddings.col(id) += share;
      }
      continue;
    }

    // Route each pooled dimension's gradient to its argmax timestep.
    Eigen::MatrixXd dh_fwd = Eigen::MatrixXd::Zero(hdim, steps);
    Eigen::MatrixXd dh_bwd = Eigen::MatrixXd::Zero(hdim, steps);  // processing order
    for (Eigen::Index j = 0; j < 2 * hdim; ++j) {
      const Eigen::Index t = fw.argmax[static_cast<std::size_t>(j)];
      if (j < hdim) {
        dh_fwd(j, t) += dencoding(j);
      } else {
        dh_bwd(j - hdim, steps - 1 - t) += dencoding(j);
      }
    }
    Eigen::MatrixXd dx_fwd, dx_bwd;
    Eigen::MatrixXd* dx_fwd_ptr = nullptr;
    Eigen::MatrixXd* dx_bwd_ptr = nullptr;
    if (config.finetune_embeddings) {
      dx_fwd.resize(fw.inputs.rows(), steps);
      dx_bwd.resize(fw.inputs.rows(), steps);
      dx_fwd_ptr = &dx_fwd;
      dx_bwd_ptr = &dx_bwd;
    }
    backprop_lstm(params.forward, fw.inputs, fw.fwd, dh_fwd, grad.forward, dx_fwd_ptr);
    backprop_lstm(params.backward, fw.inputs.rowwise().reverse(), fw.bwd, dh_bwd, grad.backward,
                  dx_bwd_ptr);
    if (config.finetune_embeddings) {
      for (Eigen::Index t = 0; t < steps; ++t) {
        grad.embeddings.col(ex.ids[static_cast<std::size_t>(t)]) += dx_fwd.col(t) + dx_bwd.col(steps - 1 - t);
      }
    }
  }
  out.loss *= scale;
  if (!std::isfinite(out.loss)) throw NumericalError("non-finite loss");
  return out;
}

HypothesisModel::HypothesisModel(ModelConfig config, LabelScheme scheme, const EmbeddingTable& table)
    : config_(config),
      scheme_(std::move(scheme)),
      vocab_(table.vocabulary()),
      params_(init_parameters(config_, table)) {
  if (scheme_.size() != config_.n_labels) {
    throw ConfigError(fmt::format("model has {} labels, scheme '{}' has {}", config_.n_labels,
                                  scheme_.id(), scheme_.size()));
  }
}

HypothesisModel::HypothesisModel(ModelConfig config, LabelScheme scheme, Vocabulary vocab,
                                 ModelParameters params)
    : config_(config), scheme_(std::move(scheme)), vocab_(std::move(vocab)), params_(std::move(params)) {
  config_.validate();
  if (scheme_.size() != config_.n_labels) throw ConfigError("label scheme does not match n_labels");
  const auto dim = static_cast<Eigen::Index>(config_.embedding_dim);
  if (params_.embeddings.rows() != dim ||
      params_.embeddings.cols() != static_cast<Eigen::Index>(vocab_.size()) + 1 ||
      params_.hidden_weights.cols() != static_cast<Eigen::Index>(config_.encoding_width()) ||
      params_.output_weights.rows() != static_cast<Eigen::Index>(config_.n_labels)) {
    throw ShapeError("parameter shapes do not match the model configuration");
  }
}

Prediction HypothesisModel::predict_ids(const TokenIds& ids) const {
  Prediction p = classify(encode(ids, params_, config_), params_);
  p.label = scheme_.label(static_cast<std::size_t>(p.label.index));
  return p;
}

Prediction HypothesisModel::predict(std::string_view hypothesis) const {
  return predict_ids(ids(tokenize(hypothesis)));
}

std::vector<Prediction> HypothesisModel::predict_all(std::span<const NLIInstance> instances) const {
  std::vector<Prediction> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(predict(inst.hypothesis));
  return out;
}

std::vector<Example> HypothesisModel::examples(std::span<const NLIInstance> instances) const {
  std::vector<Example> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back(Example{ids(tokenize(inst.hypothesis)), inst.label.index});
  }
  return out;
}

}  // namespace hyponli
