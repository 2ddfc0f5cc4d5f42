#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyponli/corpus.hpp"
#include "hyponli/model.hpp"

namespace hyponli {

// What "dev accuracy decreased" is measured against.
enum class DeclineRule { previous_epoch, best_so_far };

struct TrainConfig {
  double lr0 = 0.1;
  double decay = 0.99;
  double divide_on_decline = 5.0;
  double lr_floor = 1e-5;
  std::size_t max_epochs = 20;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  DeclineRule decline_rule = DeclineRule::previous_epoch;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;          // rate used for this epoch's updates
  double train_loss = 0.0;  // mean over the epoch's examples
  double dev_acc = 0.0;     // percent
  double lr_next = 0.0;     // rate after decay and any decline division
};

// Row 0 of the history is the untrained model: its dev accuracy is the
// reference epoch 1 is compared against, and it competes for "best".
struct TrainState {
  std::size_t epoch = 0;
  double lr = 0.0;
  double best_dev_acc = 0.0;
  std::size_t best_epoch = 0;
  double last_dev_acc = 0.0;
  bool stopped_by_floor = false;
  std::vector<EpochRecord> history;
  ModelParameters best_params;
};

struct FitResult {
  ModelParameters params;
  TrainState state;
};

// Returns dev accuracy in percent for the model after `epoch` epochs (0 = untrained).
using DevEvaluator = std::function<double(const HypothesisModel& model, std::size_t epoch)>;

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, TrainState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const TrainState& state() const noexcept { return state_; }

 private:
  TrainState state_;
};

// params -= lr * gradients, elementwise. Empty gradient blocks (frozen
// embeddings) are skipped; any other shape mismatch throws ShapeError.
void sgd_step(ModelParameters& params, const Gradients& gradients, double lr);

// Per epoch: shuffle train from (seed, epoch), SGD over minibatches at the
// current rate, measure dev accuracy, then lr *= decay and, if dev accuracy
// strictly dropped, lr /= divide_on_decline. Stops when lr < lr_floor or
// after max_epochs. On return `model` holds the best-dev parameters.
// Non-finite losses throw TrainingAborted carrying the state so far.
FitResult fit(std::span<const NLIInstance> train, std::span<const NLIInstance> dev,
              HypothesisModel& model, const TrainConfig& config, const DevEvaluator& evaluate = {});

// CSV: epoch,lr,train_loss,dev_acc
void write_training_log(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace hyponli
