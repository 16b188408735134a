#include "mweparse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mweparse/util.hpp"

namespace mweparse {

namespace {

std::string ascii_lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  return s;
}

const Token& member_token(const Sentence& sentence, int pos) {
  if (pos < 1 || pos > sentence.size()) {
    throw IndexError("MWE position " + std::to_string(pos) + " outside sentence of length " +
                     std::to_string(sentence.size()));
  }
  return sentence.tokens[pos - 1];
}

// Per-sentence one-to-one matching of identical position sets. Returns, for
// each predicted instance, the index of the gold instance it matched or -1.
std::vector<int> match_sentence(const SentenceInstances& gold, const SentenceInstances& pred) {
  std::vector<int> matched_pred(pred.size(), -1);
  std::vector<bool> gold_used(gold.size(), false);
  for (std::size_t pi = 0; pi < pred.size(); ++pi) {
    for (std::size_t gi = 0; gi < gold.size(); ++gi) {
      if (!gold_used[gi] && gold[gi].positions == pred[pi].positions) {
        gold_used[gi] = true;
        matched_pred[pi] = static_cast<int>(gi);
        break;
      }
    }
  }
  return matched_pred;
}

void check_alignment(const std::vector<SentenceInstances>& gold,
                     const std::vector<SentenceInstances>& pred) {
  if (gold.size() != pred.size()) {
    throw DegenerateInputError("gold and predicted corpora have different sentence counts");
  }
}

}  // namespace

PRF PRF::from_counts(long tp, long pred_count, long gold_count) {
  PRF out;
  out.tp = tp;
  out.pred_count = pred_count;
  out.gold_count = gold_count;
  out.undefined_p = pred_count == 0;
  out.undefined_r = gold_count == 0;
  out.p = pred_count > 0 ? static_cast<double>(tp) / pred_count : 0.0;
  out.r = gold_count > 0 ? static_cast<double>(tp) / gold_count : 0.0;
  out.f1 = out.p + out.r > 0 ? 2 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

std::vector<std::string> lemma_multiset(const Sentence& sentence, const MweInstance& inst) {
  std::vector<std::string> lemmas;
  lemmas.reserve(inst.positions.size());
  for (int pos : inst.positions) {
    const Token& tok = member_token(sentence, pos);
    if (tok.lemma == "_" || tok.lemma.empty()) {
      warn("token '" + tok.form + "' has no lemma; falling back to its lowercased form");
      lemmas.push_back(ascii_lower(tok.form));
    } else {
      lemmas.push_back(tok.lemma);
    }
  }
  std::sort(lemmas.begin(), lemmas.end());
  return lemmas;
}

std::string surface_realization(const Sentence& sentence, const MweInstance& inst) {
  std::string out;
  int prev = -1;
  for (int pos : inst.positions) {
    if (prev > 0) {
      if (pos - prev > 1) out += " <" + std::to_string(pos - prev - 1) + ">";
      out += ' ';
    }
    out += member_token(sentence, pos).form;
    prev = pos;
  }
  return out;
}

SeenIndex build_seen_index(const Corpus& train) {
  SeenIndex index;
  for (const Sentence& sent : train) {
    for (const MweInstance& inst : extract_mwes(sent)) {
      index.lemma_multisets.insert(lemma_multiset(sent, inst));
      index.surfaces.insert(surface_realization(sent, inst));
    }
  }
  return index;
}

std::vector<SentenceInstances> corpus_instances(const Corpus& corpus) {
  std::vector<SentenceInstances> out;
  out.reserve(corpus.size());
  for (const Sentence& sent : corpus) out.push_back(extract_mwes(sent));
  return out;
}

PRF mwe_based_prf(const std::vector<SentenceInstances>& gold,
                  const std::vector<SentenceInstances>& pred) {
  check_alignment(gold, pred);
  long tp = 0, npred = 0, ngold = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    ngold += static_cast<long>(gold[s].size());
    npred += static_cast<long>(pred[s].size());
    for (int m : match_sentence(gold[s], pred[s])) tp += m >= 0;
  }
  return PRF::from_counts(tp, npred, ngold);
}

namespace {

// Shared machinery for the unseen and variant restrictions: `in_class` decides
// whether a gold instance (or an unmatched prediction judged by its own
// realization) belongs to the restricted class.
template <class InClass>
PRF restricted_prf(const Corpus& ref, const std::vector<SentenceInstances>& gold,
                   const std::vector<SentenceInstances>& pred, InClass&& in_class) {
  check_alignment(gold, pred);
  if (ref.size() != gold.size()) {
    throw DegenerateInputError("reference corpus does not align with the instance lists");
  }
  long tp = 0, npred = 0, ngold = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const Sentence& sent = ref[s];
    std::vector<bool> gold_in_class(gold[s].size());
    for (std::size_t gi = 0; gi < gold[s].size(); ++gi) {
      gold_in_class[gi] = in_class(sent, gold[s][gi]);
      ngold += gold_in_class[gi];
    }
    std::vector<int> matches = match_sentence(gold[s], pred[s]);
    for (std::size_t pi = 0; pi < pred[s].size(); ++pi) {
      if (matches[pi] >= 0) {
        if (gold_in_class[matches[pi]]) {
          ++npred;
          ++tp;
        }
        // predictions matched to out-of-class gold do not count here
      } else if (in_class(sent, pred[s][pi])) {
        ++npred;
      }
    }
  }
  return PRF::from_counts(tp, npred, ngold);
}

}  // namespace

PRF unseen_prf(const Corpus& ref, const std::vector<SentenceInstances>& gold,
               const std::vector<SentenceInstances>& pred, const SeenIndex& index) {
  return restricted_prf(ref, gold, pred, [&](const Sentence& sent, const MweInstance& inst) {
    return !index.seen(lemma_multiset(sent, inst));
  });
}

PRF variant_prf(const Corpus& ref, const std::vector<SentenceInstances>& gold,
                const std::vector<SentenceInstances>& pred, const SeenIndex& index) {
  return restricted_prf(ref, gold, pred, [&](const Sentence& sent, const MweInstance& inst) {
    return index.seen(lemma_multiset(sent, inst)) &&
           index.surfaces.count(surface_realization(sent, inst)) == 0;
  });
}

PRF token_based_prf(const std::vector<SentenceInstances>& gold,
                    const std::vector<SentenceInstances>& pred) {
  check_alignment(gold, pred);
  long tp = 0, pred_tokens = 0, gold_tokens = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (const MweInstance& g : gold[s]) gold_tokens += static_cast<long>(g.positions.size());
    for (const MweInstance& p : pred[s]) pred_tokens += static_cast<long>(p.positions.size());

    auto overlap = [&](std::size_t pi, std::size_t gi) {
      long count = 0;
      for (int pos : pred[s][pi].positions)
        count += std::binary_search(gold[s][gi].positions.begin(),
                                    gold[s][gi].positions.end(), pos);
      return count;
    };
    // greedy best pairing: repeatedly take the highest-overlap free pair
    std::vector<bool> pused(pred[s].size()), gused(gold[s].size());
    while (true) {
      long best = 0;
      std::size_t bp = 0, bg = 0;
      for (std::size_t pi = 0; pi < pred[s].size(); ++pi) {
        if (pused[pi]) continue;
        for (std::size_t gi = 0; gi < gold[s].size(); ++gi) {
          if (gused[gi]) continue;
          long ov = overlap(pi, gi);
          if (ov > best) best = ov, bp = pi, bg = gi;
        }
      }
      if (best == 0) break;
      pused[bp] = gused[bg] = true;
      tp += best;
    }
  }
  return PRF::from_counts(tp, pred_tokens, gold_tokens);
}

double pearson(const std::vector<std::pair<double, double>>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw DegenerateInputError("pearson needs at least 3 points");
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) mx += x, my += y;
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cov = 0, vx = 0, vy = 0;
  for (const auto& [x, y] : points) {
    cov += (x - mx) * (y - my);
    vx += (x - mx) * (x - mx);
    vy += (y - my) * (y - my);
  }
  if (vx == 0 || vy == 0) throw DegenerateInputError("pearson is undefined for zero variance");
  return cov / std::sqrt(vx * vy);
}

EvalReport evaluate_corpora(const Corpus& gold, const Corpus& pred, const Corpus& train) {
  const auto gold_instances = corpus_instances(gold);
  const auto pred_instances = corpus_instances(pred);
  const SeenIndex index = build_seen_index(train);

  EvalReport report;
  report.global = mwe_based_prf(gold_instances, pred_instances);
  report.unseen = unseen_prf(gold, gold_instances, pred_instances, index);
  report.variant = variant_prf(gold, gold_instances, pred_instances, index);
  report.token = token_based_prf(gold_instances, pred_instances);

  std::set<std::string> categories;
  for (const auto& sent : gold_instances)
    for (const MweInstance& inst : sent) categories.insert(inst.category);
  for (const auto& sent : pred_instances)
    for (const MweInstance& inst : sent) categories.insert(inst.category);
  for (const std::string& cat : categories) {
    auto filter = [&](const std::vector<SentenceInstances>& all) {
      std::vector<SentenceInstances> out(all.size());
      for (std::size_t s = 0; s < all.size(); ++s)
        for (const MweInstance& inst : all[s])
          if (inst.category == cat) out[s].push_back(inst);
      return out;
    };
    report.per_category[cat] = mwe_based_prf(filter(gold_instances), filter(pred_instances));
  }

  for (const auto& sent : gold_instances) {
    for (const MweInstance& inst : sent) {
      bool contiguous = inst.positions.back() - inst.positions.front() + 1 ==
                        static_cast<int>(inst.positions.size());
      ++(contiguous ? report.continuous_gold : report.discontinuous_gold);
      ++(inst.positions.size() > 1 ? report.multitoken_gold : report.singletoken_gold);
    }
  }
  return report;
}

namespace {

std::string pct(double v) { return format_fixed(100.0 * v, 2); }

void append_prf_machine(std::ostringstream& out, const std::string& key, const PRF& s) {
  out << key << "/P: " << pct(s.p) << "\n";
  out << key << "/R: " << pct(s.r) << "\n";
  out << key << "/F1: " << pct(s.f1) << "\n";
  out << key << "/tp: " << s.tp << "\n";
  out << key << "/pred: " << s.pred_count << "\n";
  out << key << "/gold: " << s.gold_count << "\n";
  if (s.undefined_p) out << key << "/P_undefined: 1\n";
  if (s.undefined_r) out << key << "/R_undefined: 1\n";
}

}  // namespace

std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const PRF& s) {
    out << "  " << name;
    for (std::size_t i = name.size(); i < 14; ++i) out << ' ';
    out << pct(s.p) << "\t" << pct(s.r) << "\t" << pct(s.f1) << "\t(gold " << s.gold_count
        << ", pred " << s.pred_count << ")";
    if (s.undefined_p || s.undefined_r) out << " [empty denominator]";
    out << "\n";
  };
  out << "MWE-based scores (percent)\n";
  out << "  " << "              P\tR\tF1\n";
  row("global", report.global);
  row("unseen", report.unseen);
  row("variant", report.variant);
  row("token-based", report.token);
  if (!report.per_category.empty()) {
    out << "Per category\n";
    for (const auto& [cat, prf] : report.per_category) row(cat, prf);
  }
  out << "Gold composition: " << report.continuous_gold << " continuous, "
      << report.discontinuous_gold << " discontinuous, " << report.multitoken_gold
      << " multi-token, " << report.singletoken_gold << " single-token\n";
  return out.str();
}

std::string render_report_machine(const EvalReport& report) {
  std::ostringstream out;
  append_prf_machine(out, "global", report.global);
  append_prf_machine(out, "unseen", report.unseen);
  append_prf_machine(out, "variant", report.variant);
  append_prf_machine(out, "token", report.token);
  for (const auto& [cat, prf] : report.per_category) append_prf_machine(out, "category/" + cat, prf);
  out << "counts/gold_continuous: " << report.continuous_gold << "\n";
  out << "counts/gold_discontinuous: " << report.discontinuous_gold << "\n";
  out << "counts/gold_multitoken: " << report.multitoken_gold << "\n";
  out << "counts/gold_singletoken: " << report.singletoken_gold << "\n";
  return out.str();
}

}  // namespace mweparse
