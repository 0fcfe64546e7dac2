#include "phg/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "phg/dsl.hpp"
#include "phg/errors.hpp"

#ifndef PHG_DATA_DIR
#define PHG_DATA_DIR "data"
#endif

namespace phg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void read_grid(const json& j, GridSpec& g) {
  reject_unknown(j, {"r0", "L", "directions", "base_points", "base_box", "seed"}, "grid");
  g.r0 = j.value("r0", g.r0);
  g.L = j.value("L", g.L);
  g.directions = j.value("directions", g.directions);
  g.base_points = j.value("base_points", g.base_points);
  g.base_box = j.value("base_box", g.base_box);
  g.seed = j.value("seed", g.seed);
}

void read_tolerances(const json& j, Tolerances& t) {
  reject_unknown(j,
                 {"slope_tolerance", "drift_tolerance", "limit_tolerance", "tail_tolerance", "homogeneity_tolerance",
                  "noise_floor", "t_switch", "k_max", "deriv_max"},
                 "tolerances");
  t.slope_tolerance = j.value("slope_tolerance", t.slope_tolerance);
  t.drift_tolerance = j.value("drift_tolerance", t.drift_tolerance);
  t.limit_tolerance = j.value("limit_tolerance", t.limit_tolerance);
  t.tail_tolerance = j.value("tail_tolerance", t.tail_tolerance);
  t.homogeneity_tolerance = j.value("homogeneity_tolerance", t.homogeneity_tolerance);
  t.noise_floor = j.value("noise_floor", t.noise_floor);
  t.t_switch = j.value("t_switch", t.t_switch);
  t.k_max = j.value("k_max", t.k_max);
  t.deriv_max = j.value("deriv_max", t.deriv_max);
}

void read_heisenberg(const json& j, HeisenbergSettings& h) {
  reject_unknown(j, {"kernel_grid", "zoom_grid", "base_points", "zoom_base_points", "t_values", "s_values", "algebra_samples",
                     "prop116_samples"},
                 "heisenberg");
  if (j.contains("kernel_grid")) h.kernel_grid = j.at("kernel_grid").get<BoxGrid>();
  if (j.contains("zoom_grid")) h.zoom_grid = j.at("zoom_grid").get<BoxGrid>();
  h.base_points = j.value("base_points", h.base_points);
  h.zoom_base_points = j.value("zoom_base_points", h.zoom_base_points);
  h.t_values = j.value("t_values", h.t_values);
  h.s_values = j.value("s_values", h.s_values);
  h.algebra_samples = j.value("algebra_samples", h.algebra_samples);
  h.prop116_samples = j.value("prop116_samples", h.prop116_samples);
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("tolerance ") + name + " must be positive");
  };
  positive(tol.slope_tolerance, "slope_tolerance");
  positive(tol.drift_tolerance, "drift_tolerance");
  positive(tol.limit_tolerance, "limit_tolerance");
  positive(tol.tail_tolerance, "tail_tolerance");
  positive(tol.homogeneity_tolerance, "homogeneity_tolerance");
  positive(tol.noise_floor, "noise_floor");
  positive(tol.t_switch, "t_switch");
  if (tol.k_max < 1) throw ConfigError("k_max must be >= 1");
  if (tol.deriv_max < 0) throw ConfigError("deriv_max must be >= 0");
  if (!(grid.r0 > 0.0) || grid.L < 2) throw ConfigError("grid: need r0 > 0 and L >= 2");
  if (grid.base_points < 1 || !(grid.base_box >= 0.0)) throw ConfigError("grid: need base_points >= 1");
  if (heisenberg.base_points < 1 || heisenberg.zoom_base_points < 1) throw ConfigError("heisenberg: base_points must be >= 1");
  for (double s : heisenberg.s_values)
    if (!(s > 0.0)) throw ConfigError("heisenberg: s values must be positive");
}

RunConfig default_config() {
  RunConfig c;
  c.corpus = std::string(PHG_DATA_DIR) + "/corpus/corpus.json";
  return c;
}

RunConfig load_config(const std::string& path) {
  json j = read_json(path);
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  RunConfig c = default_config();
  try {
    reject_unknown(j, {"weights", "variant", "grid", "tolerances", "corpus", "entries", "out", "seed", "model",
                       "heisenberg"},
                   "config");
    if (j.contains("weights")) c.weights = Weights(j.at("weights").get<std::vector<int>>());
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.grid.seed = c.seed;
    if (j.contains("grid")) read_grid(j.at("grid"), c.grid);
    if (j.contains("tolerances")) read_tolerances(j.at("tolerances"), c.tol);
    if (j.contains("corpus")) {
      fs::path p = j.at("corpus").get<std::string>();
      if (p.is_relative()) p = fs::path(path).parent_path() / p;
      c.corpus = p.lexically_normal().string();
    }
    c.entries = j.value("entries", c.entries);
    c.out = j.value("out", c.out);
    if (j.contains("model")) c.model = j.at("model").get<HeisenbergModel>();
    if (j.contains("heisenberg")) read_heisenberg(j.at("heisenberg"), c.heisenberg);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(path + ": " + e.what());
  }
  c.validate();
  return c;
}

void to_json(json& j, const RunConfig& c) {
  const auto& t = c.tol;
  j = {{"weights", c.weights},
       {"variant", variant_name(c.variant)},
       {"grid",
        {{"r0", c.grid.r0},
         {"L", c.grid.L},
         {"directions", c.grid.directions},
         {"base_points", c.grid.base_points},
         {"base_box", c.grid.base_box},
         {"seed", c.grid.seed}}},
       {"tolerances",
        {{"slope_tolerance", t.slope_tolerance},
         {"drift_tolerance", t.drift_tolerance},
         {"limit_tolerance", t.limit_tolerance},
         {"tail_tolerance", t.tail_tolerance},
         {"homogeneity_tolerance", t.homogeneity_tolerance},
         {"noise_floor", t.noise_floor},
         {"t_switch", t.t_switch},
         {"k_max", t.k_max},
         {"deriv_max", t.deriv_max}}},
       {"corpus", fs::path(c.corpus).filename().string()},
       {"entries", c.entries},
       {"seed", c.seed},
       {"model", c.model}};
}

SymbolClass parse_class(const std::string& s) {
  if (s == "schwartz" || s == "S^-inf") return SymbolClass::Schwartz;
  if (s == "S^m" || s == "symbol") return SymbolClass::Symbol;
  if (s == "S^m_phg" || s == "phg") return SymbolClass::Polyhomogeneous;
  if (s == "HS^m" || s == "hs") return SymbolClass::HomogeneousModSchwartz;
  if (s == "homogeneous") return SymbolClass::Homogeneous;
  throw ConfigError("unknown symbol class '" + s + "'");
}

std::string class_name(SymbolClass c) {
  switch (c) {
    case SymbolClass::Schwartz: return "schwartz";
    case SymbolClass::Symbol: return "S^m";
    case SymbolClass::Polyhomogeneous: return "S^m_phg";
    case SymbolClass::HomogeneousModSchwartz: return "HS^m";
    case SymbolClass::Homogeneous: return "homogeneous";
  }
  return "?";
}

SymbolExpr CorpusEntry::symbol() const {
  if (cls == SymbolClass::Polyhomogeneous) throw InvalidParameter(name + ": an expansion has no single symbol");
  try {
    return parse_symbol(source, {sig, weights});
  } catch (const ParseError& e) {
    throw ParseError(name + ": " + e.what(), e.offset());
  }
}

Expansion CorpusEntry::expansion() const {
  if (cls != SymbolClass::Polyhomogeneous) throw InvalidParameter(name + ": not an expansion");
  Expansion e;
  e.m = m;
  e.weights = weights;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    ExpansionTerm t;
    try {
      t.a = parse_symbol(terms[j], {sig.without_t(), weights});
    } catch (const ParseError& err) {
      throw ParseError(name + " term " + std::to_string(j) + ": " + err.what(), err.offset());
    }
    t.order = m - static_cast<double>(j);
    t.cert = Certificate::OnTheNose;
    e.terms.push_back(std::move(t));
  }
  return e;
}

void from_json(const json& j, CorpusEntry& e) {
  reject_unknown(j, {"name", "class", "m", "weights", "sig", "source", "terms", "k", "N", "note"}, "corpus entry");
  e.name = j.at("name").get<std::string>();
  try {
    e.cls = parse_class(j.at("class").get<std::string>());
    e.m = j.value("m", 0.0);
    e.weights = Weights(j.at("weights").get<std::vector<int>>());
    const json& s = j.at("sig");
    e.sig.n_x = s.value("n_x", 0);
    e.sig.d_xi = s.value("d_xi", e.weights.d());
    e.sig.has_t = s.value("has_t", false);
    e.sig.index_base = s.value("index_base", 1);
    if (e.sig.d_xi != e.weights.d()) throw ConfigError("weights and d_xi disagree");
    if (e.cls == SymbolClass::Polyhomogeneous) {
      e.terms = j.at("terms").get<std::vector<std::string>>();
      e.sig.has_t = true;
    } else {
      e.source = j.at("source").get<std::string>();
    }
    if (e.cls == SymbolClass::HomogeneousModSchwartz && !e.sig.has_t) throw ConfigError("HS^m entries need a t slot");
    e.k = j.value("k", 0);
    e.N = j.value("N", 2);
    e.note = j.value("note", "");
  } catch (const json::exception& err) {
    throw ConfigError("corpus entry " + e.name + ": " + err.what());
  } catch (const ConfigError& err) {
    throw ConfigError("corpus entry " + e.name + ": " + err.what());
  } catch (const InvalidParameter& err) {
    throw ConfigError("corpus entry " + e.name + ": " + err.what());
  }
}

void to_json(json& j, const CorpusEntry& e) {
  j = {{"name", e.name},
       {"class", class_name(e.cls)},
       {"m", e.m},
       {"weights", e.weights},
       {"sig", {{"n_x", e.sig.n_x}, {"d_xi", e.sig.d_xi}, {"has_t", e.sig.has_t}, {"index_base", e.sig.index_base}}}};
  if (e.cls == SymbolClass::Polyhomogeneous) j["terms"] = e.terms;
  else j["source"] = e.source;
  if (e.cls == SymbolClass::Schwartz) j["k"] = e.k;
  if (e.cls == SymbolClass::HomogeneousModSchwartz) j["N"] = e.N;
  j["note"] = e.note;
}

const CorpusEntry& Corpus::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw ConfigError("no corpus entry named '" + name + "'");
}

std::vector<const CorpusEntry*> Corpus::of_class(SymbolClass c) const {
  std::vector<const CorpusEntry*> out;
  for (const auto& e : entries)
    if (e.cls == c) out.push_back(&e);
  return out;
}

Corpus load_corpus(const std::string& path) {
  json j = read_json(path);
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("entries")) throw ConfigError(path + ": expected an 'entries' list");
    list = &j.at("entries");
  }
  if (!list->is_array()) throw ConfigError(path + ": entries must be a list");
  Corpus c;
  std::set<std::string> seen;
  for (const auto& item : *list) {
    CorpusEntry e = item.get<CorpusEntry>();
    if (!seen.insert(e.name).second) throw ConfigError(path + ": duplicate entry '" + e.name + "'");
    c.entries.push_back(std::move(e));
  }
  return c;
}

}  // namespace phg
