#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mweparse/errors.hpp"

namespace mweparse {

// One entry of the PARSEME:MWE column: "4:VID" or a bare continuation "4".
struct MweCode {
  int id = 0;
  std::string category;  // empty on continuations
};

struct Token {
  int index = 0;  // 1-based position
  std::string form = "_";
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = -1;  // 0 = root, -1 = unknown ("_")
  std::string deprel = "_";
  std::string deps = "_";
  std::string misc = "_";
  bool mwe_annotated = true;  // false when the MWE column is "_"
  std::vector<MweCode> mwe_codes;
};

// One annotated expression: category plus the sorted member positions.
struct MweInstance {
  std::string category;
  std::vector<int> positions;  // 1-based, strictly increasing
  bool operator==(const MweInstance&) const = default;
};

struct Sentence {
  std::vector<std::string> comments;  // '#' lines, verbatim
  std::vector<Token> tokens;
  // Multiword range lines ("3-4" ids), keyed by how many tokens precede them.
  std::vector<std::pair<int, std::string>> range_lines;
  std::optional<std::string> source_id;

  int size() const { return static_cast<int>(tokens.size()); }
  bool heads_known() const;
  std::vector<int> heads() const;  // heads[i] is the head of token i+1; -1 unknown
};

using Corpus = std::vector<Sentence>;

Corpus parse_cupt(std::istream& in);
Corpus parse_cupt_string(const std::string& text);
Corpus parse_cupt_file(const std::string& path);

// Inverse of parse_cupt on its own output. MWE ids are renumbered 1..k in
// first-occurrence order within each sentence.
void write_cupt(const Corpus& corpus, std::ostream& out);
std::string write_cupt_string(const Corpus& corpus);
void write_cupt_file(const Corpus& corpus, const std::string& path);

// Groups per-token codes into instances, in first-occurrence order.
std::vector<MweInstance> extract_mwes(const Sentence& sentence);

// Replaces all MWE codes of a sentence with the given instances.
void assign_mwes(Sentence& sentence, const std::vector<MweInstance>& instances);

}  // namespace mweparse
