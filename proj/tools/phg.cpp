// phg: batch front-end for the symbol checks, the expansion/extension
// pipeline, the Heisenberg model checks and the acceptance suite.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "phg/acceptance.hpp"
#include "phg/errors.hpp"
#include "phg/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> entries;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> criteria;
  std::string model;
  std::string check;
};

phg::RunConfig make_config(const Options& o) {
  phg::RunConfig c = o.config.empty() ? phg::default_config() : phg::load_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    c.grid.seed = *o.seed;
  }
  if (!o.out.empty()) c.out = o.out;
  if (!o.entries.empty()) c.entries = o.entries;
  c.validate();
  return c;
}

using EntryCommand = phg::CommandResult (*)(const phg::RunConfig&, const phg::CorpusEntry&, const std::string&);

// Runs cmd on the selected entries, or on every entry it accepts when none is named.
int run_entries(const Options& o, EntryCommand cmd, const std::vector<phg::SymbolClass>& classes) {
  phg::RunConfig c = make_config(o);
  phg::Corpus corpus = phg::load_corpus(c.corpus);
  std::vector<const phg::CorpusEntry*> todo;
  if (!c.entries.empty()) {
    for (const auto& n : c.entries) todo.push_back(&corpus.find(n));
  } else {
    for (const auto& e : corpus.entries)
      if (classes.empty() || std::find(classes.begin(), classes.end(), e.cls) != classes.end()) todo.push_back(&e);
  }
  if (todo.empty()) {
    std::cerr << "error: no corpus entries selected\n";
    return phg::kExitUsage;
  }
  int code = phg::kExitPass;
  for (const auto* e : todo) {
    phg::CommandResult r = cmd(c, *e, c.out);
    if (r.exit_code == phg::kExitUsage) {
      std::cerr << r.summary << "\n";
      return phg::kExitUsage;
    }
    std::cout << r.summary << "\n";
    code = std::max(code, r.exit_code);
  }
  return code;
}

int run_heisenberg(const Options& o) {
  phg::RunConfig c = make_config(o);
  phg::HeisenbergModel M = c.model;
  if (!o.model.empty()) {
    std::ifstream in(o.model);
    if (!in) throw phg::ConfigError("cannot read " + o.model);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw phg::ConfigError(o.model + ": " + e.what());
    }
    M = j.get<phg::HeisenbergModel>();
  }
  phg::CommandResult r = phg::cmd_heisenberg(c, M, o.check, c.out);
  (r.exit_code == phg::kExitUsage ? std::cerr : std::cout) << r.summary << "\n";
  return r.exit_code;
}

int run_accept(const Options& o) {
  phg::RunConfig c = make_config(o);
  phg::Corpus corpus = phg::load_corpus(c.corpus);
  if (corpus.entries.empty()) {
    std::cerr << "error: corpus " << c.corpus << " is empty\n";
    return phg::kExitUsage;
  }
  for (const auto& n : o.criteria) phg::find_criterion(n);
  auto results = phg::run_acceptance(c, corpus, o.criteria,
                                     [](const phg::CriterionResult& r) { std::cout << phg::format_result_line(r) << std::endl; });
  nlohmann::json summary = phg::acceptance_summary(c, results);
  std::filesystem::create_directories(c.out);
  const std::string path = (std::filesystem::path(c.out) / "acceptance.json").string();
  phg::write_file_atomic(path, summary.dump(2) + "\n");
  std::cout << "summary: " << path << "\n";
  return summary["pass"].get<bool>() ? phg::kExitPass : phg::kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phg: polyhomogeneous symbols, HS extensions and the model Heisenberg calculus"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "report directory");
    sub->add_option("--seed", o.seed, "random seed (overrides the config)");
  };
  auto with_entry = [&](CLI::App* sub) {
    common(sub);
    sub->add_option("--entry", o.entries, "corpus entry name (repeatable)");
  };

  auto* check = app.add_subcommand("check", "run the checker of each entry's declared class");
  with_entry(check);
  auto* extract = app.add_subcommand("extract", "extract a_0..a_N from HS^m entries");
  with_entry(extract);
  auto* extend = app.add_subcommand("extend", "build extensions of S^m_phg entries");
  with_entry(extend);
  auto* roundtrip = app.add_subcommand("roundtrip", "expansion <-> extension round trip");
  with_entry(roundtrip);
  auto* heis = app.add_subcommand("heisenberg", "model Heisenberg checks");
  common(heis);
  heis->add_option("check", o.check, "algebra | chart | prop116 | thm108 | prop123")
      ->required()
      ->check(CLI::IsMember({"algebra", "chart", "prop116", "thm108", "prop123"}));
  heis->add_option("--model", o.model, "model file (JSON: {d, B} or {preset})")->check(CLI::ExistingFile);
  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  common(accept);
  accept->add_option("--criterion", o.criteria, "criterion id or key (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? phg::kExitPass : phg::kExitUsage;
  }

  try {
    using SC = phg::SymbolClass;
    if (*check) return run_entries(o, phg::cmd_check, {});
    if (*extract) return run_entries(o, phg::cmd_extract, {SC::HomogeneousModSchwartz});
    if (*extend) return run_entries(o, phg::cmd_extend, {SC::Polyhomogeneous});
    if (*roundtrip) return run_entries(o, phg::cmd_roundtrip, {SC::HomogeneousModSchwartz, SC::Polyhomogeneous});
    if (*heis) return run_heisenberg(o);
    if (*accept) return run_accept(o);
  } catch (const phg::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return phg::kExitUsage;
  } catch (const phg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return phg::kExitUsage;
  } catch (const phg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return phg::kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return phg::kExitUsage;
  }
  return phg::kExitUsage;
}
