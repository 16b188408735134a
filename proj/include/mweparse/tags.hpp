#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mweparse/cupt.hpp"

namespace mweparse {

// Per-token labels over {O} + {B-c, I-c, o-c}: B-c starts an expression of
// category c, I-c continues it, o-c marks a token lying inside the span
// without belonging to it.
using TagSequence = std::vector<std::string>;

class LabelVocabulary {
 public:
  LabelVocabulary() { add("O"); }

  int add(const std::string& label);
  // Registers B-c, o-c, I-c for a category, in that order.
  void add_category(const std::string& category);
  int index_of(const std::string& label) const;  // -1 when absent
  const std::string& label_of(int index) const;
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

// Throws EncodingConflictError when two instances share a token or two
// same-category spans overlap.
TagSequence encode_tags(int n, const std::vector<MweInstance>& mwes);

// Total on arbitrary label strings; ill-formed sequences are repaired
// deterministically (an orphan I-c opens a new expression).
std::vector<MweInstance> decode_tags(const TagSequence& tags);

// {O} plus B/o/I labels of every category in the corpus, first-occurrence order.
LabelVocabulary build_label_vocab(const Corpus& corpus);

// Training-data preparation: keeps a maximal encodable subset, preferring
// longer expressions; dropped counts accumulate into *dropped when given.
std::vector<MweInstance> drop_encoding_conflicts(const std::vector<MweInstance>& mwes,
                                                 int* dropped = nullptr);

}  // namespace mweparse
