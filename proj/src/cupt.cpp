#include "mweparse/cupt.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "mweparse/tree_crf.hpp"
#include "mweparse/util.hpp"

namespace mweparse {

namespace {

constexpr int kColumnCount = 11;  // 10 CoNLL-U columns + PARSEME:MWE

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

bool is_range_id(const std::string& s) {
  std::size_t dash = s.find('-');
  if (dash == std::string::npos) return false;
  return all_digits(s.substr(0, dash)) && all_digits(s.substr(dash + 1));
}

std::vector<MweCode> parse_mwe_column(const std::string& col, long line_no) {
  std::vector<MweCode> codes;
  for (const std::string& part : split(col, ';')) {
    std::size_t colon = part.find(':');
    std::string id_str = colon == std::string::npos ? part : part.substr(0, colon);
    std::string cat = colon == std::string::npos ? "" : part.substr(colon + 1);
    if (!all_digits(id_str) || std::stol(id_str) <= 0 ||
        (colon != std::string::npos && cat.empty())) {
      throw ParseError("malformed MWE code '" + part + "'", line_no);
    }
    codes.push_back({static_cast<int>(std::stol(id_str)), cat});
  }
  return codes;
}

void finish_sentence(Sentence& sent, Corpus& corpus, long first_line) {
  if (sent.tokens.empty() && sent.comments.empty() && sent.range_lines.empty()) return;
  if (sent.tokens.empty()) {
    throw ParseError("sentence block without token lines", first_line);
  }
  const int n = sent.size();
  for (const Token& tok : sent.tokens) {
    if (tok.head > n) {
      throw ParseError("head " + std::to_string(tok.head) + " of token " +
                       std::to_string(tok.index) + " exceeds sentence length " +
                       std::to_string(n));
    }
  }
  for (const std::string& c : sent.comments) {
    for (const char* key : {"# source_sent_id = ", "# sent_id = "}) {
      if (!sent.source_id && c.rfind(key, 0) == 0) {
        sent.source_id = c.substr(std::string(key).size());
      }
    }
  }
  if (sent.heads_known() && !is_valid_tree(sent.heads())) {
    warn("gold heads of sentence " +
         sent.source_id.value_or("#" + std::to_string(corpus.size() + 1)) +
         " do not form a single-rooted tree");
  }
  corpus.push_back(std::move(sent));
  sent = Sentence{};
}

}  // namespace

bool Sentence::heads_known() const {
  return std::all_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return t.head >= 0; });
}

std::vector<int> Sentence::heads() const {
  std::vector<int> h;
  h.reserve(tokens.size());
  for (const Token& t : tokens) h.push_back(t.head);
  return h;
}

Corpus parse_cupt(std::istream& in) {
  Corpus corpus;
  Sentence sent;
  std::string line;
  long line_no = 0;
  long sent_first_line = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish_sentence(sent, corpus, sent_first_line);
      sent_first_line = line_no + 1;
      continue;
    }
    if (line[0] == '#') {
      sent.comments.push_back(line);
      continue;
    }
    std::vector<std::string> cols = split(line, '\t');
    if (cols.size() != kColumnCount) {
      throw ParseError("expected " + std::to_string(kColumnCount) +
                       " tab-separated columns, got " + std::to_string(cols.size()),
                       line_no);
    }
    if (is_range_id(cols[0])) {
      sent.range_lines.emplace_back(sent.size(), line);
      continue;
    }
    if (!all_digits(cols[0])) {
      throw ParseError("unsupported token id '" + cols[0] + "'", line_no);
    }
    Token tok;
    tok.index = static_cast<int>(std::stol(cols[0]));
    if (tok.index != sent.size() + 1) {
      if (tok.index <= sent.size()) {
        throw ParseError("duplicate token index " + std::to_string(tok.index), line_no);
      }
      throw ParseError("token index " + std::to_string(tok.index) +
                       " is not consecutive (expected " + std::to_string(sent.size() + 1) + ")",
                       line_no);
    }
    tok.form = cols[1];
    tok.lemma = cols[2];
    tok.upos = cols[3];
    tok.xpos = cols[4];
    tok.feats = cols[5];
    if (cols[6] == "_") {
      tok.head = -1;
    } else if (all_digits(cols[6])) {
      tok.head = static_cast<int>(std::stol(cols[6]));
    } else {
      throw ParseError("malformed head '" + cols[6] + "'", line_no);
    }
    tok.deprel = cols[7];
    tok.deps = cols[8];
    tok.misc = cols[9];
    const std::string& mwe = cols[10];
    if (mwe == "_") {
      tok.mwe_annotated = false;
    } else if (mwe != "*") {
      tok.mwe_codes = parse_mwe_column(mwe, line_no);
    }
    sent.tokens.push_back(std::move(tok));
  }
  finish_sentence(sent, corpus, sent_first_line);
  return corpus;
}

Corpus parse_cupt_string(const std::string& text) {
  std::istringstream in(text);
  return parse_cupt(in);
}

Corpus parse_cupt_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_cupt(in);
}

std::vector<MweInstance> extract_mwes(const Sentence& sentence) {
  std::vector<int> order;  // ids in first-occurrence order
  std::map<int, MweInstance> by_id;
  for (const Token& tok : sentence.tokens) {
    for (const MweCode& code : tok.mwe_codes) {
      auto [it, inserted] = by_id.try_emplace(code.id);
      if (inserted) order.push_back(code.id);
      if (!code.category.empty()) {
        if (!it->second.category.empty() && it->second.category != code.category) {
          throw ParseError("MWE id " + std::to_string(code.id) + " labelled both '" +
                           it->second.category + "' and '" + code.category + "'");
        }
        it->second.category = code.category;
      }
      it->second.positions.push_back(tok.index);
    }
  }
  std::vector<MweInstance> out;
  out.reserve(order.size());
  for (int id : order) {
    MweInstance& inst = by_id[id];
    if (inst.category.empty()) {
      throw ParseError("MWE id " + std::to_string(id) + " never receives a category");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void assign_mwes(Sentence& sentence, const std::vector<MweInstance>& instances) {
  for (Token& tok : sentence.tokens) {
    tok.mwe_annotated = true;
    tok.mwe_codes.clear();
  }
  int next_id = 0;
  for (const MweInstance& inst : instances) {
    ++next_id;
    bool first = true;
    for (int pos : inst.positions) {
      if (pos < 1 || pos > sentence.size()) {
        throw IndexError("MWE position " + std::to_string(pos) +
                         " outside sentence of length " + std::to_string(sentence.size()));
      }
      sentence.tokens[pos - 1].mwe_codes.push_back({next_id, first ? inst.category : ""});
      first = false;
    }
  }
}

namespace {

std::string render_mwe_column(const Token& tok, const std::map<int, int>& renumber,
                              const std::map<int, int>& first_token_of_id,
                              const std::map<int, std::string>& category_of_id) {
  if (!tok.mwe_annotated) return "_";
  if (tok.mwe_codes.empty()) return "*";
  std::vector<int> ids;
  for (const MweCode& code : tok.mwe_codes) ids.push_back(code.id);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) { return renumber.at(a) < renumber.at(b); });
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ';';
    out += std::to_string(renumber.at(id));
    if (first_token_of_id.at(id) == tok.index && !category_of_id.at(id).empty()) {
      out += ':' + category_of_id.at(id);
    }
  }
  return out;
}

}  // namespace

void write_cupt(const Corpus& corpus, std::ostream& out) {
  for (const Sentence& sent : corpus) {
    // ids renumbered 1..k in first-occurrence order, category on first token
    std::map<int, int> renumber;
    std::map<int, int> first_token_of_id;
    std::map<int, std::string> category_of_id;
    for (const Token& tok : sent.tokens) {
      for (const MweCode& code : tok.mwe_codes) {
        if (renumber.emplace(code.id, static_cast<int>(renumber.size()) + 1).second) {
          first_token_of_id[code.id] = tok.index;
          category_of_id[code.id] = "";
        }
        if (!code.category.empty() && category_of_id[code.id].empty()) {
          category_of_id[code.id] = code.category;
        }
      }
    }
    for (const std::string& c : sent.comments) out << c << '\n';
    std::size_t next_range = 0;
    for (int i = 0; i <= sent.size(); ++i) {
      while (next_range < sent.range_lines.size() && sent.range_lines[next_range].first == i) {
        out << sent.range_lines[next_range].second << '\n';
        ++next_range;
      }
      if (i == sent.size()) break;
      const Token& tok = sent.tokens[i];
      out << tok.index << '\t' << tok.form << '\t' << tok.lemma << '\t' << tok.upos << '\t'
          << tok.xpos << '\t' << tok.feats << '\t'
          << (tok.head < 0 ? std::string("_") : std::to_string(tok.head)) << '\t' << tok.deprel
          << '\t' << tok.deps << '\t' << tok.misc << '\t'
          << render_mwe_column(tok, renumber, first_token_of_id, category_of_id) << '\n';
    }
    out << '\n';
  }
}

std::string write_cupt_string(const Corpus& corpus) {
  std::ostringstream out;
  write_cupt(corpus, out);
  return out.str();
}

void write_cupt_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  write_cupt(corpus, out);
}

}  // namespace mweparse
