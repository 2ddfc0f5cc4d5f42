#include "hyponli/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "hyponli/error.hpp"

namespace hyponli {
namespace {

constexpr const char* kMagic = "hyponli-checkpoint";
constexpr int kVersion = 1;

struct LineReader {
  std::istream& in;
  const std::string& source;
  std::size_t line_no = 0;

  std::string next() {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, line_no + 1, "unexpected end of checkpoint");
    ++line_no;
    return line;
  }

  // "key value" with the expected key.
  std::string value(const std::string& key) {
    const std::string line = next();
    if (line.rfind(key + " ", 0) != 0) throw ParseError(source, line_no, "expected '" + key + "'");
    return line.substr(key.size() + 1);
  }

  std::size_t count(const std::string& key) {
    const std::string v = value(key);
    try {
      std::size_t pos = 0;
      const auto n = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "'" + key + "' is not a nonnegative integer");
    }
  }
};

Eigen::MatrixXd* block_target(ModelParameters& p, const std::string& name) {
  static const std::map<std::string, Eigen::MatrixXd ModelParameters::*> matrices = {
      {"embeddings", &ModelParameters::embeddings},
      {"mlp.hidden.weights", &ModelParameters::hidden_weights},
      {"mlp.output.weights", &ModelParameters::output_weights},
  };
  if (auto it = matrices.find(name); it != matrices.end()) return &(p.*(it->second));
  if (name == "forward.input") return &p.forward.input;
  if (name == "forward.recurrent") return &p.forward.recurrent;
  if (name == "backward.input") return &p.backward.input;
  if (name == "backward.recurrent") return &p.backward.recurrent;
  return nullptr;
}

Eigen::VectorXd* vector_target(ModelParameters& p, const std::string& name) {
  if (name == "forward.bias") return &p.forward.bias;
  if (name == "backward.bias") return &p.backward.bias;
  if (name == "mlp.hidden.bias") return &p.hidden_bias;
  if (name == "mlp.output.bias") return &p.output_bias;
  return nullptr;
}

}  // namespace

void write_checkpoint(std::ostream& out, const HypothesisModel& model) {
  const auto& c = model.config();
  out << kMagic << ' ' << kVersion << '\n';
  out << "encoder " << to_string(c.encoder) << '\n';
  out << "embedding_dim " << c.embedding_dim << '\n';
  out << "hidden_dim " << c.hidden_dim << '\n';
  out << "mlp_hidden " << c.mlp_hidden << '\n';
  out << "n_labels " << c.n_labels << '\n';
  out << "seed " << c.seed << '\n';
  out << "finetune_embeddings " << (c.finetune_embeddings ? 1 : 0) << '\n';
  out << "scheme " << model.scheme().id() << '\n';
  out << "labels " << model.scheme().size() << '\n';
  for (const auto& l : model.scheme().labels()) out << l.name << '\n';
  out << "vocab " << model.vocabulary().size() << '\n';
  for (const auto& tok : model.vocabulary().tokens()) out << tok << '\n';

  const ModelParameters& p = model.parameters();
  auto write_block = [&out](const char* name, const auto& m) {
    if (m.size() == 0) return;
    out << "block " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (i) out << ' ';
      out << fmt::format("{:a}", m.data()[i]);
    }
    out << '\n';
  };
  write_block("embeddings", p.embeddings);
  write_block("forward.input", p.forward.input);
  write_block("forward.recurrent", p.forward.recurrent);
  write_block("forward.bias", p.forward.bias);
  write_block("backward.input", p.backward.input);
  write_block("backward.recurrent", p.backward.recurrent);
  write_block("backward.bias", p.backward.bias);
  write_block("mlp.hidden.weights", p.hidden_weights);
  write_block("mlp.hidden.bias", p.hidden_bias);
  write_block("mlp.output.weights", p.output_weights);
  write_block("mlp.output.bias", p.output_bias);
  out << "end\n";
}

void write_checkpoint(const std::filesystem::path& path, const HypothesisModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_checkpoint(out, model);
  if (!out) throw ConfigError("write failed for " + path.string());
}

HypothesisModel read_checkpoint(std::istream& in, const std::string& source) {
  LineReader r{in, source};
  if (r.next() != fmt::format("{} {}", kMagic, kVersion)) {
    throw ParseError(source, r.line_no, "not a version 1 hyponli checkpoint");
  }
  ModelConfig c;
  c.encoder = encoder_kind_from_string(r.value("encoder"));
  c.embedding_dim = r.count("embedding_dim");
  c.hidden_dim = r.count("hidden_dim");
  c.mlp_hidden = r.count("mlp_hidden");
  c.n_labels = r.count("n_labels");
  c.seed = std::stoull(r.value("seed"));
  c.finetune_embeddings = r.value("finetune_embeddings") == "1";
  const std::string scheme_id = r.value("scheme");
  std::vector<std::string> names(r.count("labels"));
  for (auto& n : names) n = r.next();
  const std::size_t n_vocab = r.count("vocab");
  Vocabulary vocab;
  for (std::size_t i = 0; i < n_vocab; ++i) {
    const std::string tok = r.next();
    if (vocab.add(tok) != i) throw ParseError(source, r.line_no, "duplicate vocabulary token '" + tok + "'");
  }
  vocab.freeze();

  ModelParameters p;
  while (true) {
    const std::string header = r.next();
    if (header == "end") break;
    std::istringstream hs(header);
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    if (!(hs >> tag >> name >> rows >> cols) || tag != "block" || rows < 0 || cols < 0) {
      throw ParseError(source, r.line_no, "expected 'block <name> <rows> <cols>'");
    }
    std::span<double> dest;
    if (auto* m = block_target(p, name)) {
      m->resize(rows, cols);
      dest = std::span<double>(m->data(), static_cast<std::size_t>(m->size()));
    } else if (auto* v = vector_target(p, name)) {
      if (cols != 1) throw ParseError(source, r.line_no, "bias block must have one column");
      v->resize(rows);
      dest = std::span<double>(v->data(), static_cast<std::size_t>(v->size()));
    } else {
      throw ParseError(source, r.line_no, "unknown parameter block '" + name + "'");
    }
    const std::string values = r.next();
    const char* cursor = values.c_str();
    for (auto& d : dest) {
      char* end = nullptr;
      d = std::strtod(cursor, &end);
      if (end == cursor) throw ParseError(source, r.line_no, "too few values for block " + name);
      cursor = end;
    }
    while (*cursor == ' ') ++cursor;
    if (*cursor != '\0') throw ParseError(source, r.line_no, "too many values for block " + name);
  }
  return HypothesisModel(c, LabelScheme(scheme_id, names), std::move(vocab), std::move(p));
}

HypothesisModel read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace hyponli
