#include "hyponli/train.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hyponli/error.hpp"
#include "hyponli/rng.hpp"

namespace hyponli {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("decay must be in (0, 1]");
  if (!(divide_on_decline > 1.0)) throw ConfigError("divide_on_decline must exceed 1");
  if (!(lr_floor > 0.0)) throw ConfigError("lr_floor must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
}

void sgd_step(ModelParameters& params, const Gradients& gradients, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  auto apply = [lr](auto& p, const auto& g, const char* name) {
    if (g.size() == 0) return;
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ShapeError(fmt::format("gradient block {} is {}x{}, parameter is {}x{}", name, g.rows(),
                                   g.cols(), p.rows(), p.cols()));
    }
    p -= lr * g;
  };
  apply(params.embeddings, gradients.embeddings, "embeddings");
  apply(params.forward.input, gradients.forward.input, "forward.input");
  apply(params.forward.recurrent, gradients.forward.recurrent, "forward.recurrent");
  apply(params.forward.bias, gradients.forward.bias, "forward.bias");
  apply(params.backward.input, gradients.backward.input, "backward.input");
  apply(params.backward.recurrent, gradients.backward.recurrent, "backward.recurrent");
  apply(params.backward.bias, gradients.backward.bias, "backward.bias");
  apply(params.hidden_weights, gradients.hidden_weights, "mlp.hidden.weights");
  apply(params.hidden_bias, gradients.hidden_bias, "mlp.hidden.bias");
  apply(params.output_weights, gradients.output_weights, "mlp.output.weights");
  apply(params.output_bias, gradients.output_bias, "mlp.output.bias");
}

namespace {

double dev_accuracy(const HypothesisModel& model, std::span<const Example> dev) {
  std::size_t hits = 0;
  for (const auto& ex : dev) hits += model.predict_ids(ex.ids).label.index == ex.label ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(dev.size());
}

}  // namespace

FitResult fit(std::span<const NLIInstance> train, std::span<const NLIInstance> dev,
              HypothesisModel& model, const TrainConfig& config, const DevEvaluator& evaluate) {
  config.validate();
  if (train.empty() || dev.empty()) throw ConfigError("fit needs nonempty train and dev splits");

  const std::vector<Example> train_examples = model.examples(train);
  const std::vector<Example> dev_examples = model.examples(dev);
  auto measure = [&](std::size_t epoch) {
    return evaluate ? evaluate(model, epoch) : dev_accuracy(model, dev_examples);
  };

  TrainState state;
  state.lr = config.lr0;
  try {
    const double initial_loss = batch_loss(train_examples, model.parameters(), model.config());
    const double initial_acc = measure(0);
    state.history.push_back(EpochRecord{0, config.lr0, initial_loss, initial_acc, config.lr0});
    state.best_dev_acc = initial_acc;
    state.last_dev_acc = initial_acc;
    state.best_params = model.parameters();
  } catch (const NumericalError& e) {
    throw TrainingAborted(std::string("initial evaluation failed: ") + e.what(), state);
  }

  std::vector<std::size_t> order(train_examples.size());
  std::vector<Example> batch;
  batch.reserve(config.batch_size);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    const double lr = state.lr;
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        batch.clear();
        for (std::size_t k = start; k < stop; ++k) batch.push_back(train_examples[order[k]]);
        const LossAndGradients lg = loss_and_gradients(batch, model.parameters(), model.config());
        if (!std::isfinite(lg.loss)) {
          throw NumericalError(fmt::format("non-finite loss at batch {}", start / config.batch_size));
        }
        loss_sum += lg.loss * static_cast<double>(batch.size());
        sgd_step(model.parameters(), lg.gradients, lr);
      }
      if (!model.parameters().all_finite()) throw NumericalError("parameters became non-finite");
    } catch (const NumericalError& e) {
      state.epoch = epoch;
      throw TrainingAborted(fmt::format("epoch {}: {}", epoch, e.what()), state);
    }

    const double dev_acc = measure(epoch);
    const double reference =
        config.decline_rule == DeclineRule::previous_epoch ? state.last_dev_acc : state.best_dev_acc;
    double next_lr = lr * config.decay;
    if (dev_acc < reference) next_lr /= config.divide_on_decline;

    if (dev_acc > state.best_dev_acc) {
      state.best_dev_acc = dev_acc;
      state.best_epoch = epoch;
      state.best_params = model.parameters();
    }
    state.history.push_back(EpochRecord{epoch, lr, loss_sum / static_cast<double>(order.size()),
                                        dev_acc, next_lr});
    state.epoch = epoch;
    state.last_dev_acc = dev_acc;
    state.lr = next_lr;
    if (next_lr < config.lr_floor) {
      state.stopped_by_floor = true;
      break;
    }
  }

  model.parameters() = state.best_params;
  return FitResult{state.best_params, std::move(state)};
}

void write_training_log(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,lr,train_loss,dev_acc\n";
  for (const auto& r : history) {
    out << fmt::format("{},{:.10e},{:.8f},{:.4f}\n", r.epoch, r.lr, r.train_loss, r.dev_acc);
  }
}

}  // namespace hyponli
