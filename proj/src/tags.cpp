#include "mweparse/tags.hpp"

#include <algorithm>
#include <map>

namespace mweparse {

namespace {

std::string describe(const MweInstance& inst) {
  std::string out = inst.category + "@[";
  for (std::size_t i = 0; i < inst.positions.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(inst.positions[i]);
  }
  return out + "]";
}

void check_instance(const MweInstance& inst, int n) {
  if (inst.category.empty()) throw ContractError("MWE instance without a category");
  if (inst.positions.empty()) throw ContractError("MWE instance without positions");
  for (std::size_t i = 0; i < inst.positions.size(); ++i) {
    int p = inst.positions[i];
    if (p < 1 || p > n) {
      throw IndexError("MWE position " + std::to_string(p) + " outside sentence of length " +
                       std::to_string(n));
    }
    if (i > 0 && p <= inst.positions[i - 1]) {
      throw ContractError("MWE positions not strictly increasing in " + describe(inst));
    }
  }
}

bool conflicts(const MweInstance& a, const MweInstance& b) {
  for (int p : a.positions)
    if (std::binary_search(b.positions.begin(), b.positions.end(), p)) return true;
  if (a.category == b.category) {
    // same-category spans may not overlap even without shared tokens
    return a.positions.front() <= b.positions.back() &&
           b.positions.front() <= a.positions.back();
  }
  return false;
}

}  // namespace

int LabelVocabulary::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  index_.emplace(label, id);
  return id;
}

void LabelVocabulary::add_category(const std::string& category) {
  add("B-" + category);
  add("o-" + category);
  add("I-" + category);
}

int LabelVocabulary::index_of(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

const std::string& LabelVocabulary::label_of(int index) const {
  if (index < 0 || index >= size()) {
    throw IndexError("label index " + std::to_string(index) +
                     " outside vocabulary of size " + std::to_string(size()));
  }
  return labels_[index];
}

TagSequence encode_tags(int n, const std::vector<MweInstance>& mwes) {
  for (const MweInstance& inst : mwes) check_instance(inst, n);
  for (std::size_t i = 0; i < mwes.size(); ++i)
    for (std::size_t j = i + 1; j < mwes.size(); ++j)
      if (conflicts(mwes[i], mwes[j]))
        throw EncodingConflictError("cannot encode " + describe(mwes[i]) +
                                    " together with " + describe(mwes[j]));

  std::vector<const MweInstance*> order;
  for (const MweInstance& inst : mwes) order.push_back(&inst);
  std::sort(order.begin(), order.end(), [](const MweInstance* a, const MweInstance* b) {
    return a->positions.front() < b->positions.front();
  });

  TagSequence tags(n, "O");
  for (const MweInstance* inst : order) {
    for (std::size_t i = 0; i < inst->positions.size(); ++i)
      tags[inst->positions[i] - 1] = (i == 0 ? "B-" : "I-") + inst->category;
  }
  // gap labels; a later-starting expression overwrites an enclosing one's o-
  for (const MweInstance* inst : order) {
    for (int p = inst->positions.front() + 1; p < inst->positions.back(); ++p) {
      std::string& t = tags[p - 1];
      if (t == "O" || t.rfind("o-", 0) == 0) t = "o-" + inst->category;
    }
  }
  return tags;
}

std::vector<MweInstance> decode_tags(const TagSequence& tags) {
  std::vector<MweInstance> out;
  std::map<std::string, std::size_t> open;  // category -> index into out
  for (int pos = 1; pos <= static_cast<int>(tags.size()); ++pos) {
    const std::string& t = tags[pos - 1];
    const bool is_b = t.rfind("B-", 0) == 0;
    const bool is_i = t.rfind("I-", 0) == 0;
    const bool is_gap = t.rfind("o-", 0) == 0;
    if (is_gap) continue;
    if (!is_b && !is_i) {
      // O (or anything unrecognised) legally terminates every open span
      open.clear();
      continue;
    }
    const std::string cat = t.substr(2);
    auto it = open.find(cat);
    if (is_i && it != open.end()) {
      out[it->second].positions.push_back(pos);
    } else {
      // B-c, or an orphan I-c repaired into a fresh start
      out.push_back({cat, {pos}});
      open[cat] = out.size() - 1;
    }
  }
  return out;
}

LabelVocabulary build_label_vocab(const Corpus& corpus) {
  LabelVocabulary vocab;
  for (const Sentence& sent : corpus)
    for (const MweInstance& inst : extract_mwes(sent)) vocab.add_category(inst.category);
  return vocab;
}

std::vector<MweInstance> drop_encoding_conflicts(const std::vector<MweInstance>& mwes,
                                                 int* dropped) {
  // longer expressions win; ties go to the earlier-starting one
  std::vector<int> order(mwes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (mwes[a].positions.size() != mwes[b].positions.size())
      return mwes[a].positions.size() > mwes[b].positions.size();
    return mwes[a].positions.front() < mwes[b].positions.front();
  });
  std::vector<bool> keep(mwes.size(), false);
  std::vector<int> accepted;
  for (int idx : order) {
    bool ok = true;
    for (int prev : accepted)
      if (conflicts(mwes[idx], mwes[prev])) {
        ok = false;
        break;
      }
    if (ok) {
      keep[idx] = true;
      accepted.push_back(idx);
    } else if (dropped) {
      ++*dropped;
    }
  }
  std::vector<MweInstance> out;
  for (std::size_t i = 0; i < mwes.size(); ++i)
    if (keep[i]) out.push_back(mwes[i]);
  return out;
}

}  // namespace mweparse
