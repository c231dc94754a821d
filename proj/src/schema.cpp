#include "schemarl/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace schemarl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string vocab_text(const VocabFingerprint& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (i) out += ',';
    out += std::string(skill_name(vocab[i].first)) + ":" + std::string(skill_name(vocab[i].second));
  }
  return out;
}

VocabFingerprint parse_vocab(const std::string& text, int line_no) {
  VocabFingerprint vocab;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw FormatError("schema line " + std::to_string(line_no) + ": bad vocab entry '" + item +
                        "'");
    }
    try {
      vocab.emplace_back(parse_skill(trim(item.substr(0, colon))),
                         parse_skill(trim(item.substr(colon + 1))));
    } catch (const std::invalid_argument& e) {
      throw FormatError("schema line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return vocab;
}

}  // namespace

VocabFingerprint fingerprint(const TaskSpec& spec) {
  VocabFingerprint out;
  for (const auto& js : spec.joint_vocab) out.emplace_back(js.left, js.right);
  return out;
}

std::vector<double> SchemaLogits::row(int t) const {
  const auto begin = values.begin() + static_cast<std::ptrdiff_t>(t) * vocab_size();
  return {begin, begin + vocab_size()};
}

SchemaLogits init_schema(const TaskSpec& spec) {
  SchemaLogits l;
  l.family = spec.family;
  l.horizon = spec.horizon;
  l.vocab = fingerprint(spec);
  l.values.assign(static_cast<std::size_t>(spec.horizon) * spec.vocab_size(), 0.0);
  return l;
}

void update_logits(SchemaLogits& logits, const Trajectory& trajectory, double alpha,
                   double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ContractViolation("alpha and beta must be positive");
  for (const auto& s : trajectory.steps) {
    if (s.t < 0 || s.t >= logits.horizon || s.joint_index < 0 ||
        s.joint_index >= logits.vocab_size()) {
      throw ContractViolation("update_logits: step (" + std::to_string(s.t) + ", " +
                              std::to_string(s.joint_index) + ") out of range");
    }
  }
  const double delta = trajectory.succeeded() ? alpha : -beta;
  for (const auto& s : trajectory.steps) logits.at(s.t, s.joint_index) += delta;
}

std::vector<int> schema_argmax(const SchemaLogits& logits) {
  std::vector<int> out;
  for (int t = 0; t < logits.horizon; ++t) {
    int best = 0;
    for (int x = 1; x < logits.vocab_size(); ++x) {
      if (logits.at(t, x) > logits.at(t, best)) best = x;
    }
    out.push_back(best);
  }
  return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

void write_schema(std::ostream& os, const SchemaLogits& logits) {
  os << "family=" << family_name(logits.family) << "\n";
  os << "T=" << logits.horizon << "\n";
  os << "vocab=" << vocab_text(logits.vocab) << "\n";
  char buf[40];
  for (int t = 0; t < logits.horizon; ++t) {
    for (int x = 0; x < logits.vocab_size(); ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", logits.at(t, x));
      os << (x ? " " : "") << buf;
    }
    os << "\n";
  }
  const auto best = schema_argmax(logits);
  os << "# argmax:";
  for (int t = 0; t < logits.horizon; ++t) {
    const auto& [l, r] = logits.vocab[best[t]];
    os << " " << t + 1 << ") L: " << skill_name(l) << ", R: " << skill_name(r);
  }
  os << "\n";
}

SchemaLogits read_schema(std::istream& is) {
  SchemaLogits out;
  bool have_family = false, have_t = false, have_vocab = false;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      try {
        if (key == "family") {
          out.family = parse_family(value);
          have_family = true;
        } else if (key == "T") {
          out.horizon = std::stoi(value);
          have_t = true;
        } else if (key == "vocab") {
          out.vocab = parse_vocab(value, line_no);
          have_vocab = true;
        } else {
          throw FormatError("schema line " + std::to_string(line_no) + ": unknown key '" + key +
                            "'");
        }
      } catch (const std::invalid_argument& e) {
        throw FormatError("schema line " + std::to_string(line_no) + ": " + e.what());
      }
      continue;
    }
    if (!have_family || !have_t || !have_vocab) {
      throw FormatError("schema line " + std::to_string(line_no) + ": values before header");
    }
    std::istringstream row(line);
    std::string tok;
    int count = 0;
    while (row >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw FormatError("schema line " + std::to_string(line_no) + ": bad value '" + tok + "'");
      }
      out.values.push_back(v);
      ++count;
    }
    if (count != out.vocab_size()) {
      throw FormatError("schema line " + std::to_string(line_no) + ": expected " +
                        std::to_string(out.vocab_size()) + " values, got " +
                        std::to_string(count));
    }
  }
  if (!have_family || !have_t || !have_vocab) throw FormatError("schema file: missing header");
  if (out.horizon <= 0 ||
      out.values.size() != static_cast<std::size_t>(out.horizon) * out.vocab.size()) {
    throw FormatError("schema file: expected " + std::to_string(out.horizon) + " rows of values");
  }
  return out;
}

void export_schema(const SchemaLogits& logits, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_schema(os, logits);
}

ImportedSchema adopt_schema(SchemaLogits logits, const TaskSpec& spec, ImportMode mode) {
  if (logits.horizon != spec.horizon) {
    throw TransferIncompatible("schema transfer incompatible: horizon " +
                               std::to_string(logits.horizon) + " != task horizon " +
                               std::to_string(spec.horizon));
  }
  if (logits.vocab != fingerprint(spec)) {
    throw TransferIncompatible("schema transfer incompatible: skill vocabulary of " +
                               std::string(family_name(logits.family)) +
                               " schema does not match " +
                               std::string(family_name(spec.family)) + " task");
  }
  return {std::move(logits), mode == ImportMode::kFrozen};
}

ImportedSchema import_schema(const std::string& path, const TaskSpec& spec, ImportMode mode) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open schema file " + path);
  return adopt_schema(read_schema(is), spec, mode);
}

std::string schema_string(const VocabFingerprint& vocab, const std::vector<int>& schema) {
  std::string out;
  for (std::size_t t = 0; t < schema.size(); ++t) {
    if (t) out += '|';
    const auto& [l, r] = vocab.at(schema[t]);
    out += std::string(skill_name(l)) + "+" + std::string(skill_name(r));
  }
  return out;
}

std::string schema_string(const TaskSpec& spec, const std::vector<int>& schema) {
  return schema_string(fingerprint(spec), schema);
}

}  // namespace schemarl
