#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hyponli/corpus.hpp"
#include "hyponli/text.hpp"

namespace hyponli {

enum class EncoderKind { bag, birnn_maxpool };

std::string_view to_string(EncoderKind kind);
// Accepts "bag" and "birnn-maxpool". Throws ConfigError otherwise.
EncoderKind encoder_kind_from_string(std::string_view name);

struct ModelConfig {
  EncoderKind encoder = EncoderKind::bag;
  std::size_t embedding_dim = 50;
  std::size_t hidden_dim = 64;  // per direction; birnn only
  std::size_t mlp_hidden = 64;
  std::size_t n_labels = 3;
  std::uint64_t seed = 0;
  bool finetune_embeddings = false;

  // Width of the sentence vector fed to the MLP.
  std::size_t encoding_width() const;
  void validate() const;
};

// One direction of the recurrent encoder. Rows are stacked per gate in the
// order input, forget, output, candidate (4 * hidden rows).
struct LstmWeights {
  Eigen::MatrixXd input;      // 4H x D
  Eigen::MatrixXd recurrent;  // 4H x H
  Eigen::VectorXd bias;       // 4H
};

struct ParameterBlock {
  std::string name;
  std::span<double> values;
};

struct ConstParameterBlock {
  std::string name;
  std::span<const double> values;
};

// Also used for gradients. Blocks a configuration does not use are left
// empty (0 x 0): the recurrent weights for the bag encoder, and the embedding
// gradient when embeddings are frozen.
struct ModelParameters {
  Eigen::MatrixXd embeddings;  // D x (V + 1); column V is the OOV vector
  LstmWeights forward;
  LstmWeights backward;
  Eigen::MatrixXd hidden_weights;  // M x encoding_width
  Eigen::VectorXd hidden_bias;     // M
  Eigen::MatrixXd output_weights;  // L x M
  Eigen::VectorXd output_bias;     // L

  // Nonempty blocks in a fixed order.
  std::vector<ParameterBlock> blocks();
  std::vector<ConstParameterBlock> blocks() const;
  std::size_t size() const;
  bool all_finite() const;

  // Same shapes, all zero.
  static ModelParameters zeros_like(const ModelParameters& other);
};

using Gradients = ModelParameters;

// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation; embeddings
// are copied from the table with the OOV vector appended as the last column.
ModelParameters init_parameters(const ModelConfig& config, const EmbeddingTable& table);

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
  Label label;  // argmax of logits, lowest index on ties
};

// Token ids index embedding columns; the OOV id is the vocabulary size.
using TokenIds = std::vector<int>;

TokenIds token_ids(const TokenizedSentence& tokens, const Vocabulary& vocab);

// Mean of the token vectors; zero vector for an empty sentence.
Eigen::VectorXd encode_bag(const TokenizedSentence& tokens, const EmbeddingTable& embeddings);
Eigen::VectorXd encode_bag(const TokenIds& ids, const ModelParameters& params);

// Elementwise max over time of [forward; backward] hidden states. Zero vector
// for an empty sentence. Throws NumericalError naming the token index when a
// hidden state stops being finite.
Eigen::VectorXd encode_birnn_maxpool(const TokenIds& ids, const ModelParameters& params);

Eigen::VectorXd encode(const TokenIds& ids, const ModelParameters& params, const ModelConfig& config);

// tanh hidden layer, linear output layer, softmax.
Prediction classify(const Eigen::VectorXd& encoding, const ModelParameters& params);

struct Example {
  TokenIds ids;
  int label = 0;
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

// Mean negative log-likelihood over the batch and its exact gradient. The
// max-pool subgradient goes to the earliest maximising timestep.
LossAndGradients loss_and_gradients(std::span<const Example> batch, const ModelParameters& params,
                                    const ModelConfig& config);
// Forward pass only.
double batch_loss(std::span<const Example> batch, const ModelParameters& params,
                  const ModelConfig& config);

// A classifier that only ever sees hypothesis text.
class HypothesisModel {
 public:
  HypothesisModel(ModelConfig config, LabelScheme scheme, const EmbeddingTable& table);
  HypothesisModel(ModelConfig config, LabelScheme scheme, Vocabulary vocab, ModelParameters params);

  const ModelConfig& config() const noexcept { return config_; }
  const LabelScheme& scheme() const noexcept { return scheme_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const ModelParameters& parameters() const noexcept { return params_; }
  ModelParameters& parameters() noexcept { return params_; }

  TokenIds ids(const TokenizedSentence& tokens) const { return token_ids(tokens, vocab_); }
  Prediction predict_ids(const TokenIds& ids) const;
  Prediction predict(std::string_view hypothesis) const;

  // Hypothesis-only: the premise field of every instance is never read.
  std::vector<Prediction> predict_all(std::span<const NLIInstance> instances) const;
  std::vector<Example> examples(std::span<const NLIInstance> instances) const;

 private:
  ModelConfig config_;
  LabelScheme scheme_;
  Vocabulary vocab_;
  ModelParameters params_;
};

}  // namespace hyponli
