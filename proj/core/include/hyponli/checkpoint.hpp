#pragma once

#include <filesystem>
#include <iosfwd>

#include "hyponli/model.hpp"

namespace hyponli {

// Text checkpoint, exact layout:
//
//   hyponli-checkpoint 1
//   encoder <bag|birnn-maxpool>
//   embedding_dim <D>
//   hidden_dim <H>
//   mlp_hidden <M>
//   n_labels <L>
//   seed <seed>
//   finetune_embeddings <0|1>
//   scheme <scheme id>
//   labels <L>            followed by L lines, one label name each
//   vocab <V>             followed by V lines, one token each, index order
//   block <name> <rows> <cols>
//   <values>              one line, column-major, C99 hex floats
//   ...                   one block record per nonempty parameter block
//   end
//
// Hex floats make the round trip bit-exact.
void write_checkpoint(std::ostream& out, const HypothesisModel& model);
void write_checkpoint(const std::filesystem::path& path, const HypothesisModel& model);

HypothesisModel read_checkpoint(std::istream& in, const std::string& source = "<stream>");
HypothesisModel read_checkpoint(const std::filesystem::path& path);

}  // namespace hyponli
