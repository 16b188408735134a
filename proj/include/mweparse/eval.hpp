#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mweparse/cupt.hpp"

namespace mweparse {

struct PRF {
  double p = 0, r = 0, f1 = 0;
  long tp = 0;
  long pred_count = 0;
  long gold_count = 0;
  bool undefined_p = false;  // empty prediction denominator
  bool undefined_r = false;  // empty gold denominator

  static PRF from_counts(long tp, long pred_count, long gold_count);
};

struct EvalReport {
  PRF global;
  PRF unseen;
  PRF variant;
  PRF token;  // token-overlap scores under greedy one-to-one pairing
  std::map<std::string, PRF> per_category;
  long continuous_gold = 0, discontinuous_gold = 0;
  long multitoken_gold = 0, singletoken_gold = 0;
};

// What "seen in training" means: the multiset of member lemmas, plus the
// exact surface realization (ordered member forms with the gap pattern).
struct SeenIndex {
  std::set<std::vector<std::string>> lemma_multisets;
  std::set<std::string> surfaces;

  bool seen(const std::vector<std::string>& lemmas) const {
    return lemma_multisets.count(lemmas) > 0;
  }
};

using SentenceInstances = std::vector<MweInstance>;

// Sorted member lemmas; missing lemmas fall back to the lowercased form.
std::vector<std::string> lemma_multiset(const Sentence& sentence, const MweInstance& inst);

// Member forms in order with gap-run lengths, e.g. "give <2> a go".
std::string surface_realization(const Sentence& sentence, const MweInstance& inst);

SeenIndex build_seen_index(const Corpus& train);

// Exact position-set matching, one-to-one within each sentence; category is
// ignored here and respected in the per-category scores.
PRF mwe_based_prf(const std::vector<SentenceInstances>& gold,
                  const std::vector<SentenceInstances>& pred);

PRF unseen_prf(const Corpus& ref, const std::vector<SentenceInstances>& gold,
               const std::vector<SentenceInstances>& pred, const SeenIndex& index);

PRF variant_prf(const Corpus& ref, const std::vector<SentenceInstances>& gold,
                const std::vector<SentenceInstances>& pred, const SeenIndex& index);

PRF token_based_prf(const std::vector<SentenceInstances>& gold,
                    const std::vector<SentenceInstances>& pred);

double pearson(const std::vector<std::pair<double, double>>& points);

std::vector<SentenceInstances> corpus_instances(const Corpus& corpus);

EvalReport evaluate_corpora(const Corpus& gold, const Corpus& pred, const Corpus& train);

std::string render_report(const EvalReport& report);          // human-readable
std::string render_report_machine(const EvalReport& report);  // key: value lines

}  // namespace mweparse
