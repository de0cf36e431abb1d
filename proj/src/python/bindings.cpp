#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "medlang/error.hpp"
#include "medlang/measure.hpp"
#include "medlang/mediation.hpp"
#include "medlang/pipeline.hpp"
#include "medlang/records.hpp"
#include "medlang/scm.hpp"

namespace py = pybind11;
using namespace medlang;

namespace {

py::dict estimate_dict(const EffectEstimate& e) {
  py::dict d;
  d["mediator"] = e.mediator_name;
  d["nde"] = e.nde;
  d["nie"] = e.nie;
  d["nie_reversed"] = e.nie_reversed;
  d["total_effect"] = e.total_effect;
  d["ci_level"] = e.ci_level;
  d["nde_ci"] = py::make_tuple(e.nde_ci.lower, e.nde_ci.upper);
  d["nie_ci"] = py::make_tuple(e.nie_ci.lower, e.nie_ci.upper);
  d["n_units"] = e.n_units;
  d["n_bootstrap"] = e.n_bootstrap;
  d["n_dropped"] = e.n_dropped;
  d["widened"] = e.widened;
  return d;
}

py::dict oracle_dict(const OracleResult& o) {
  py::dict d;
  d["mediator"] = o.mediator;
  d["nde"] = o.nde_true;
  d["nie"] = o.nie_true;
  d["nie_reversed"] = o.nie_reversed_true;
  d["total_effect"] = o.te_true;
  return d;
}

std::string records_text(const RecordSet& data) {
  std::ostringstream out;
  write_records(out, data);
  return out.str();
}

RecordSet parse_records_text(const std::string& text) {
  std::istringstream in(text);
  return read_records(in);
}

}  // namespace

PYBIND11_MODULE(_medlang, m) {
  m.doc() = "Bindings for the medlang mediation toolkit";

  auto base = py::register_exception<Error>(m, "MedlangError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto data_error = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", data_error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def(
      "measure_hedging",
      [](const std::string& text, std::optional<std::vector<std::string>> lexicon) {
        return measure_hedging(text, lexicon ? HedgingLexicon(*lexicon) : HedgingLexicon::defaults());
      },
      py::arg("text"), py::arg("lexicon") = py::none());
  m.def("measure_disfluency", &measure_disfluency, py::arg("text"), py::arg("strict_dash") = false);
  m.def("default_lexicon", [] { return HedgingLexicon::defaults().phrase_strings(); });

  m.def(
      "exact_effects",
      [](const std::string& spec_path) {
        py::list out;
        for (const auto& o : exact_effects(load_scm_spec(spec_path))) out.append(oracle_dict(o));
        return out;
      },
      py::arg("spec_path"));
  m.def(
      "simulate",
      [](const std::string& spec_path, std::size_t n, std::uint64_t seed, int folds) {
        return records_text(generate(load_scm_spec(spec_path), n, seed, folds));
      },
      py::arg("spec_path"), py::arg("n"), py::arg("seed") = 0, py::arg("folds") = 2,
      "Records in the JSONL record format.");
  m.def(
      "estimate",
      [](const std::string& records, const std::vector<std::string>& mediators, int bootstrap,
         std::uint64_t seed, double ci, unsigned threads) {
        const RecordSet data = parse_records_text(records);
        EstimationConfig config;
        config.n_bootstrap = bootstrap;
        config.seed = seed;
        config.ci_level = ci;
        config.threads = threads;
        std::vector<EffectEstimate> estimates;
        {
          py::gil_scoped_release release;
          estimates = estimate_all(data, mediators, config);
        }
        py::list out;
        for (const auto& e : estimates) out.append(estimate_dict(e));
        return out;
      },
      py::arg("records"), py::arg("mediators"), py::arg("bootstrap") = 1000, py::arg("seed") = 0,
      py::arg("ci") = 0.90, py::arg("threads") = 1);
  m.def(
      "run",
      [](const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
        RunResult r;
        {
          const RunConfig config = load_run_config(config_path);
          py::gil_scoped_release release;
          r = run_pipeline(config, out_dir);
        }
        py::dict d;
        d["advocate_utterances"] = r.advocate_utterances;
        d["included"] = r.included;
        d["excluded"] = r.excluded;
        py::list estimates;
        for (const auto& e : r.estimates) estimates.append(estimate_dict(e));
        d["estimates"] = estimates;
        d["checksums"] = r.checksums;
        return d;
      },
      py::arg("config_path"), py::arg("out_dir"));
  m.def(
      "rerun",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out_dir) {
        py::gil_scoped_release release;
        return rerun_manifest(manifest, out_dir).checksums;
      },
      py::arg("manifest"), py::arg("out_dir"));
  m.def("sha256_hex", &sha256_hex, py::arg("data"));
}
