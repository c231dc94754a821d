#ifndef SCHEMARL_SCHEMA_HPP_
#define SCHEMARL_SCHEMA_HPP_

// State-independent T x |X| skill logits: the tabular update rule, argmax
// readout and the portable text file used to transfer schemas between tasks.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "schemarl/pamdp.hpp"
#include "schemarl/trajectory.hpp"

namespace schemarl {

using VocabFingerprint = std::vector<std::pair<Skill, Skill>>;

VocabFingerprint fingerprint(const TaskSpec& spec);

struct SchemaLogits {
  TaskFamily family = TaskFamily::kLateralLifting;
  int horizon = 0;
  VocabFingerprint vocab;
  std::vector<double> values;  // horizon x vocab.size(), row-major

  int vocab_size() const { return static_cast<int>(vocab.size()); }
  double& at(int t, int x) { return values[static_cast<std::size_t>(t) * vocab.size() + x]; }
  double at(int t, int x) const { return values[static_cast<std::size_t>(t) * vocab.size() + x]; }
  std::vector<double> row(int t) const;
  bool operator==(const SchemaLogits&) const = default;
};

SchemaLogits init_schema(const TaskSpec& spec);

// Success adds alpha, failure subtracts beta, to the logit of every
// (timestep, joint skill) actually executed in the trajectory.
void update_logits(SchemaLogits& logits, const Trajectory& trajectory, double alpha, double beta);

// Per-row argmax, ties to the lowest index.
std::vector<int> schema_argmax(const SchemaLogits& logits);

// Numerically stable softmax of one row.
std::vector<double> softmax(const std::vector<double>& logits);

enum class ImportMode { kFrozen, kWarmStart };

struct ImportedSchema {
  SchemaLogits logits;
  bool frozen = false;
};

void write_schema(std::ostream& os, const SchemaLogits& logits);
SchemaLogits read_schema(std::istream& is);
void export_schema(const SchemaLogits& logits, const std::string& path);
// Throws TransferIncompatible when the horizon or vocabulary differs from
// the receiving task.
ImportedSchema import_schema(const std::string& path, const TaskSpec& spec, ImportMode mode);
ImportedSchema adopt_schema(SchemaLogits logits, const TaskSpec& spec, ImportMode mode);

// Skill names of a schema, e.g. "top-grasp+side-grasp|twist+no-op|no-op+no-op".
std::string schema_string(const TaskSpec& spec, const std::vector<int>& schema);
std::string schema_string(const VocabFingerprint& vocab, const std::vector<int>& schema);

}  // namespace schemarl

#endif  // SCHEMARL_SCHEMA_HPP_
