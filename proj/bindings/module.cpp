#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mweparse/cli.hpp"
#include "mweparse/cupt.hpp"
#include "mweparse/eval.hpp"
#include "mweparse/model.hpp"
#include "mweparse/tags.hpp"
#include "mweparse/trainer.hpp"
#include "mweparse/tree_crf.hpp"

namespace py = pybind11;
using namespace mweparse;

namespace {

Regime regime_of(const std::string& name) {
  if (name == "projective") return Regime::Projective;
  if (name == "nonprojective") return Regime::NonProjective;
  throw py::value_error("regime must be 'projective' or 'nonprojective'");
}

ArcScores scores_of(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.size() != rows[0].size() + 1) {
    throw py::value_error("arc scores must be an (n+1) x n matrix");
  }
  ArcScores s = ArcScores::zeros(static_cast<int>(rows[0].size()));
  for (int h = 0; h <= s.n; ++h) {
    if (static_cast<int>(rows[h].size()) != s.n) {
      throw py::value_error("arc scores must be an (n+1) x n matrix");
    }
    for (int d = 1; d <= s.n; ++d) s.scores[static_cast<std::size_t>(h) * s.n + d - 1] = rows[h][d - 1];
  }
  return s;
}

std::vector<std::vector<double>> matrix_out(const std::vector<double>& flat, int n) {
  std::vector<std::vector<double>> rows(n + 1, std::vector<double>(n));
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d) rows[h][d - 1] = flat[static_cast<std::size_t>(h) * n + d - 1];
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "joint verbal-MWE tagging and dependency-tree CRF core";

  py::class_<MweInstance>(m, "MweInstance")
      .def(py::init<>())
      .def(py::init([](std::string category, std::vector<int> positions) {
             return MweInstance{std::move(category), std::move(positions)};
           }),
           py::arg("category"), py::arg("positions"))
      .def_readwrite("category", &MweInstance::category)
      .def_readwrite("positions", &MweInstance::positions)
      .def("__eq__", [](const MweInstance& a, const MweInstance& b) { return a == b; })
      .def("__repr__", [](const MweInstance& i) {
        std::ostringstream out;
        out << "MweInstance(" << i.category << ", [";
        for (std::size_t k = 0; k < i.positions.size(); ++k)
          out << (k ? "," : "") << i.positions[k];
        out << "])";
        return out.str();
      });

  // corpus I/O on strings and files
  m.def("parse_cupt", [](const std::string& text) {
    Corpus corpus = parse_cupt_string(text);
    std::vector<std::vector<std::vector<std::string>>> out;
    for (const Sentence& sent : corpus) {
      std::vector<std::vector<std::string>> rows;
      for (const Token& tok : sent.tokens)
        rows.push_back({tok.form, tok.lemma, tok.upos, std::to_string(tok.head)});
      out.push_back(std::move(rows));
    }
    return out;
  }, py::arg("text"), "Parse CUPT text into [form, lemma, upos, head] rows per sentence.");
  m.def("cupt_round_trip",
        [](const std::string& text) { return write_cupt_string(parse_cupt_string(text)); },
        py::arg("text"), "Parse then re-serialize CUPT text (canonical form).");
  m.def("extract_mwes", [](const std::string& text) {
    std::vector<std::vector<MweInstance>> out;
    for (const Sentence& sent : parse_cupt_string(text)) out.push_back(extract_mwes(sent));
    return out;
  }, py::arg("text"));

  // tagging scheme
  m.def("encode_tags", &encode_tags, py::arg("n"), py::arg("mwes"));
  m.def("decode_tags", &decode_tags, py::arg("tags"));

  // tree CRF
  m.def("log_partition",
        [](const std::vector<std::vector<double>>& scores, const std::string& regime) {
          return log_partition(scores_of(scores), regime_of(regime));
        },
        py::arg("scores"), py::arg("regime") = "nonprojective");
  m.def("marginals",
        [](const std::vector<std::vector<double>>& scores, const std::string& regime) {
          ArcScores s = scores_of(scores);
          return matrix_out(marginals(s, regime_of(regime)), s.n);
        },
        py::arg("scores"), py::arg("regime") = "nonprojective");
  m.def("map_tree",
        [](const std::vector<std::vector<double>>& scores, const std::string& regime) {
          return map_tree(scores_of(scores), regime_of(regime)).heads;
        },
        py::arg("scores"), py::arg("regime") = "nonprojective");
  m.def("tree_nll",
        [](const std::vector<std::vector<double>>& scores, const std::vector<int>& gold,
           const std::string& regime) {
          ArcScores s = scores_of(scores);
          NllResult r = tree_nll(s, DepTree{gold}, regime_of(regime));
          return py::make_tuple(r.loss, matrix_out(r.grad, s.n));
        },
        py::arg("scores"), py::arg("gold_heads"), py::arg("regime") = "nonprojective");
  m.def("enumerate_trees", [](int n, const std::string& regime) {
    std::vector<std::vector<int>> out;
    for (const DepTree& t : enumerate_trees(n, regime_of(regime))) out.push_back(t.heads);
    return out;
  }, py::arg("n"), py::arg("regime") = "nonprojective");

  // evaluation
  m.def("pearson", &pearson, py::arg("points"));

  // file-level pipeline
  m.def("train", [](const std::string& config_path) { return run_train(config_path); },
        py::arg("config_path"));
  m.def("predict_file",
        [](const std::string& model, const std::string& input, const std::string& output,
           bool emit_heads) { return run_predict(model, input, output, emit_heads); },
        py::arg("model"), py::arg("input"), py::arg("output"), py::arg("emit_heads") = false);
  m.def("evaluate_files",
        [](const std::string& gold, const std::string& pred, const std::string& train_path) {
          std::ostringstream out;
          int code = run_evaluate(gold, pred, train_path, out);
          return py::make_tuple(code, out.str());
        },
        py::arg("gold"), py::arg("pred"), py::arg("train"));
}
