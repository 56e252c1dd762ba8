#include "lifeplan/lds_model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lifeplan/error.hpp"

namespace lifeplan::lds {

using bayesnet::ContinuousFamily;
using bayesnet::FamilyKind;
using bayesnet::FamilyParams;
using bayesnet::NetworkDefinition;
using bayesnet::VariableSpec;
using nlohmann::json;

const std::vector<CatalogEntry>& biosignature_catalog() {
  static const std::vector<CatalogEntry> catalog{
      {"s_L", "Life", 0, 1, true, {}},
      {"o_1", "Polyelectrolyte Presence", 0, 1, true, {"s_L"}},
      {"o_2", "Cell Membrane Presence", 0, 1, true, {"s_L"}},
      {"o_3", "Autofluorescence", 0, 1, true, {"s_L"}},
      {"o_4", "Molecular Assembly Index >= 15", 0, 1, true, {"s_L"}},
      {"o_5", "Biotic Amino Acid Diversity", 0, 22, false, {"s_L"}},
      {"o_6", "L:R Chirality Ratio (%)", 0, 100, false, {"s_L"}},
      {"o_7", "Salinity (%)", 0, 100, false, {"o_2"}},
      {"o_8", "CHNOPS Abundance (%)", 0, 100, false, {"o_4", "o_5"}},
      {"o_9", "pH", 0, 14, false, {"o_1", "o_5"}},
      {"o_10", "Redox Potential [V]", -0.5, 0, false, {"o_5"}},
  };
  return catalog;
}

namespace {

struct InstrumentRow {
  const char* name;
  std::vector<std::string> measured;
};

const std::vector<InstrumentRow>& instrument_table() {
  static const std::vector<InstrumentRow> table{
      {"HRMS", {"o_5", "o_7", "o_8", "o_10"}},
      {"SMS", {"o_5", "o_6"}},
      {"uCE-LIF", {"o_5", "o_6"}},
      {"ESA", {"o_7", "o_8"}},
      {"Microscope", {"o_2", "o_3"}},
      {"Nanopore", {"o_1"}},
  };
  return table;
}

bool on_grid(double x, double step) {
  const double k = x / step;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
}

// Reads `key` from obj into out, leaving out untouched when absent.
template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + key + ": wrong type");
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ParseError((where.empty() ? std::string("config") : where) + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key())) throw ParseError(where + it.key() + ": unknown field");
}

}  // namespace

std::vector<std::string> validate_config(const MissionConfig& c) {
  std::vector<std::string> issues;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) issues.push_back(msg);
  };
  need(c.lambda >= 0.0 && c.lambda <= 1.0, "lambda: must lie in [0, 1]");
  need(c.discount > 0.0 && c.discount < 1.0, "discount: must lie in (0, 1)");
  need(c.p_biotic >= 0.0 && c.p_biotic <= 1.0, "p_biotic: must lie in [0, 1]");
  need(c.s_v_max > 0.0, "s_v_max: must be positive");
  need(c.volume_step > 0.0, "volume_step: must be positive");
  if (c.s_v_max > 0.0 && c.volume_step > 0.0) {
    need(on_grid(c.s_v_max, c.volume_step), "s_v_max: not a multiple of volume_step");
    need(c.v_acc > 0.0 && on_grid(c.v_acc, c.volume_step), "v_acc: must be a positive multiple of volume_step");
    for (int i = 0; i < kNumInstruments; ++i) {
      const std::string f = "instrument_usage." + std::string(instrument_name(i));
      need(c.usage[i] > 0.0 && c.usage[i] <= c.s_v_max, f + ": must lie in (0, s_v_max]");
      need(on_grid(c.usage[i], c.volume_step), f + ": not representable on the volume grid");
    }
  }
  need(c.sigma() >= 0.0 && std::isfinite(c.sigma()), "sigma_acc: must be non-negative");
  need(c.accumulate_cost >= 0.0, "accumulate_cost: must be non-negative");
  need(c.infeasible_penalty > 0.0, "infeasible_penalty: must be positive");
  for (const auto& [id, b] : c.bins) {
    bool known = false;
    for (const auto& e : biosignature_catalog())
      if (e.id == id && !e.binary) known = true;
    need(known, "bins." + id + ": not a non-binary observation variable");
    need(b >= 2, "bins." + id + ": need at least 2 bins");
  }
  need(c.cpt_samples_per_row >= bayesnet::kMinSamplesPerRow,
       "network.samples_per_row: must be at least " + std::to_string(bayesnet::kMinSamplesPerRow));
  need(c.solver.precision > 0.0, "solver.precision: must be positive");
  need(c.solver.timeout_seconds > 0.0, "solver.timeout_seconds: must be positive");
  need(c.evaluation.rollouts >= 1, "evaluation.rollouts: must be at least 1");
  need(c.evaluation.horizon >= 1, "evaluation.horizon: must be at least 1");
  need(c.sweep.lambda_step > 0.0, "sweep.lambda.step: must be positive");
  need(c.sweep.lambda_lo >= 0.0 && c.sweep.lambda_hi <= 1.0 && c.sweep.lambda_lo <= c.sweep.lambda_hi,
       "sweep.lambda: need 0 <= lo <= hi <= 1");
  for (double t : c.sweep.t_biotic) need(t >= 0.9 && t <= 1.0, "sweep.t_biotic: values must lie in [0.9, 1]");
  for (double t : c.sweep.t_abiotic) need(t >= 0.0 && t <= 0.1, "sweep.t_abiotic: values must lie in [0, 0.1]");
  return issues;
}

MissionConfig parse_config(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError("config line " + std::to_string(line) + ": " + e.what());
  }
  reject_unknown(doc,
                 {"format", "v_acc", "sigma_acc", "s_v_max", "volume_step", "p_biotic", "lambda", "discount",
                  "accumulate_cost", "infeasible_penalty", "bins", "instrument_usage", "network", "solver",
                  "evaluation", "sweep"},
                 "");
  if (doc.contains("format") && doc["format"] != "lifeplan-config/1")
    throw ParseError("format: unsupported " + doc["format"].dump());

  MissionConfig c;
  read(doc, "v_acc", c.v_acc, "");
  if (doc.contains("sigma_acc")) {
    double s = 0;
    read(doc, "sigma_acc", s, "");
    c.sigma_acc = s;
  }
  read(doc, "s_v_max", c.s_v_max, "");
  read(doc, "volume_step", c.volume_step, "");
  read(doc, "p_biotic", c.p_biotic, "");
  read(doc, "lambda", c.lambda, "");
  read(doc, "discount", c.discount, "");
  read(doc, "accumulate_cost", c.accumulate_cost, "");
  read(doc, "infeasible_penalty", c.infeasible_penalty, "");
  if (doc.contains("bins")) {
    const json& b = doc["bins"];
    if (!b.is_object()) throw ParseError("bins: expected an object");
    for (auto it = b.begin(); it != b.end(); ++it) {
      int n = 0;
      read(b, it.key().c_str(), n, "bins.");
      c.bins[it.key()] = n;
    }
  }
  if (doc.contains("instrument_usage")) {
    const json& u = doc["instrument_usage"];
    std::set<std::string> names;
    for (int i = 0; i < kNumInstruments; ++i) names.insert(std::string(instrument_name(i)));
    reject_unknown(u, names, "instrument_usage.");
    for (int i = 0; i < kNumInstruments; ++i)
      read(u, std::string(instrument_name(i)).c_str(), c.usage[i], "instrument_usage.");
  }
  if (doc.contains("network")) {
    const json& n = doc["network"];
    reject_unknown(n, {"file", "samples_per_row", "seed"}, "network.");
    read(n, "file", c.network_file, "network.");
    read(n, "samples_per_row", c.cpt_samples_per_row, "network.");
    read(n, "seed", c.network_seed, "network.");
    if (!c.network_file.empty() && std::filesystem::path(c.network_file).is_relative())
      c.network_file = (std::filesystem::path(base_dir) / c.network_file).lexically_normal().string();
  }
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    reject_unknown(s, {"precision", "timeout_seconds"}, "solver.");
    read(s, "precision", c.solver.precision, "solver.");
    read(s, "timeout_seconds", c.solver.timeout_seconds, "solver.");
  }
  if (doc.contains("evaluation")) {
    const json& e = doc["evaluation"];
    reject_unknown(e, {"rollouts", "horizon", "seed"}, "evaluation.");
    read(e, "rollouts", c.evaluation.rollouts, "evaluation.");
    read(e, "horizon", c.evaluation.horizon, "evaluation.");
    read(e, "seed", c.evaluation.seed, "evaluation.");
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    reject_unknown(s, {"lambda", "t_biotic", "t_abiotic"}, "sweep.");
    if (s.contains("lambda")) {
      const json& l = s["lambda"];
      reject_unknown(l, {"lo", "hi", "step"}, "sweep.lambda.");
      read(l, "lo", c.sweep.lambda_lo, "sweep.lambda.");
      read(l, "hi", c.sweep.lambda_hi, "sweep.lambda.");
      read(l, "step", c.sweep.lambda_step, "sweep.lambda.");
    }
    read(s, "t_biotic", c.sweep.t_biotic, "sweep.");
    read(s, "t_abiotic", c.sweep.t_abiotic, "sweep.");
  }
  return c;
}

MissionConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  try {
    return parse_config(ss.str(), dir.empty() ? "." : dir.string());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string dump_config(const MissionConfig& c) {
  json doc;
  doc["format"] = "lifeplan-config/1";
  doc["v_acc"] = c.v_acc;
  if (c.sigma_acc) doc["sigma_acc"] = *c.sigma_acc;
  doc["s_v_max"] = c.s_v_max;
  doc["volume_step"] = c.volume_step;
  doc["p_biotic"] = c.p_biotic;
  doc["lambda"] = c.lambda;
  doc["discount"] = c.discount;
  doc["accumulate_cost"] = c.accumulate_cost;
  doc["infeasible_penalty"] = c.infeasible_penalty;
  doc["bins"] = c.bins;
  json usage;
  for (int i = 0; i < kNumInstruments; ++i) usage[std::string(instrument_name(i))] = c.usage[i];
  doc["instrument_usage"] = usage;
  json net{{"samples_per_row", c.cpt_samples_per_row}, {"seed", c.network_seed}};
  if (!c.network_file.empty()) net["file"] = c.network_file;
  doc["network"] = net;
  doc["solver"] = {{"precision", c.solver.precision}, {"timeout_seconds", c.solver.timeout_seconds}};
  doc["evaluation"] = {
      {"rollouts", c.evaluation.rollouts}, {"horizon", c.evaluation.horizon}, {"seed", c.evaluation.seed}};
  doc["sweep"] = {{"lambda", {{"lo", c.sweep.lambda_lo}, {"hi", c.sweep.lambda_hi}, {"step", c.sweep.lambda_step}}},
                  {"t_biotic", c.sweep.t_biotic},
                  {"t_abiotic", c.sweep.t_abiotic}};
  return doc.dump(2) + "\n";
}

std::string_view instrument_name(int action) {
  if (action < 0 || action >= kNumInstruments) throw Error("not an instrument action: " + std::to_string(action));
  return instrument_table()[action].name;
}

std::vector<InstrumentSpec> instruments(const MissionConfig& config) {
  std::vector<InstrumentSpec> out;
  for (int i = 0; i < kNumInstruments; ++i) {
    const auto& row = instrument_table()[i];
    out.push_back({i, row.name, row.measured, config.usage[i]});
  }
  return out;
}

std::vector<double> default_bin_edges(const CatalogEntry& e, int bins) {
  if (e.binary) return {0.0, 0.5, 1.0};
  // Amino acid diversity defaults to uneven bins separating trace, low,
  // moderate and high diversity.
  if (e.id == "o_5" && bins == 4) return {0.0, 3.0, 8.0, 15.0, 22.0};
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = e.lower + (e.upper - e.lower) * i / bins;
  edges.back() = e.upper;
  return edges;
}

NetworkDefinition default_network_definition(const MissionConfig& config) {
  NetworkDefinition def;
  std::map<std::string, int> card;
  for (const auto& e : biosignature_catalog()) {
    VariableSpec spec;
    spec.id = e.id;
    int bins = 2;
    if (!e.binary) {
      auto it = config.bins.find(e.id);
      bins = it != config.bins.end() ? it->second : 3;
    }
    spec.cardinality = bins;
    spec.bin_edges = default_bin_edges(e, bins);
    spec.parents = e.parents;
    card[e.id] = bins;
    def.variables.push_back(spec);
  }

  auto fam = [](const std::string& id, FamilyKind kind, std::vector<FamilyParams> rows) {
    return ContinuousFamily{id, kind, std::move(rows)};
  };
  const int n5 = card["o_5"];
  std::vector<std::optional<ContinuousFamily>> f(def.variables.size());
  // Rows are ordered abiotic, biotic for parent s_L.
  f[1] = fam("o_1", FamilyKind::Bernoulli, {{0.05, 0}, {0.85, 0}});
  f[2] = fam("o_2", FamilyKind::Bernoulli, {{0.05, 0}, {0.80, 0}});
  f[3] = fam("o_3", FamilyKind::Bernoulli, {{0.15, 0}, {0.70, 0}});
  f[4] = fam("o_4", FamilyKind::Bernoulli, {{0.10, 0}, {0.75, 0}});
  f[5] = fam("o_5", FamilyKind::TruncatedCount, {{3.0, 0}, {12.0, 0}});
  f[6] = fam("o_6", FamilyKind::BetaScaled, {{5.0, 5.0}, {12.0, 3.0}});
  f[7] = fam("o_7", FamilyKind::TruncatedGaussian, {{35.0, 15.0}, {60.0, 15.0}});
  std::vector<FamilyParams> r8, r9, r10;
  for (int o4 = 0; o4 < 2; ++o4)
    for (int b = 0; b < n5; ++b) r8.push_back({25.0 + 20.0 * o4 + 10.0 * b, 15.0});
  for (int o1 = 0; o1 < 2; ++o1)
    for (int b = 0; b < n5; ++b) r9.push_back({7.5 - 1.0 * o1 - 0.5 * b, 1.5});
  for (int b = 0; b < n5; ++b) r10.push_back({-0.12 - 0.08 * b, 0.1});
  f[8] = fam("o_8", FamilyKind::TruncatedGaussian, r8);
  f[9] = fam("o_9", FamilyKind::TruncatedGaussian, r9);
  f[10] = fam("o_10", FamilyKind::TruncatedGaussian, r10);
  def.families = std::move(f);
  def.tables.resize(def.variables.size());
  return def;
}

namespace {

void check_family(const ContinuousFamily& fam, const VariableSpec& spec) {
  if (!spec.has_edges()) throw ValidationError("variable '" + spec.id + "' has a family but no bin edges");
  for (std::size_t r = 0; r < fam.rows.size(); ++r) {
    const auto& p = fam.rows[r];
    const std::string where = "family of '" + spec.id + "' row " + std::to_string(r) + ": ";
    switch (fam.kind) {
      case FamilyKind::Bernoulli:
        if (!(p.first >= 0.0 && p.first <= 1.0)) throw ValidationError(where + "p outside [0, 1]");
        if (spec.lower() > 0.0 || spec.upper() < 1.0)
          throw ValidationError(where + "bernoulli values {0,1} outside the variable's range");
        break;
      case FamilyKind::TruncatedCount:
        if (!(p.first >= 0.0) || !std::isfinite(p.first)) throw ValidationError(where + "mean must be non-negative");
        if (std::floor(spec.upper()) < std::ceil(spec.lower()))
          throw ValidationError(where + "range holds no integer");
        break;
      case FamilyKind::TruncatedGaussian:
        if (!(p.second > 0.0) || !std::isfinite(p.first) || !std::isfinite(p.second))
          throw ValidationError(where + "needs a finite mean and positive sd");
        break;
      case FamilyKind::BetaScaled:
        if (!(p.first > 0.0 && p.second > 0.0)) throw ValidationError(where + "alpha and beta must be positive");
        break;
    }
  }
}

}  // namespace

LdsNetwork build_default_network(const MissionConfig& config) {
  NetworkDefinition def = config.network_file.empty() ? default_network_definition(config)
                                                      : bayesnet::load_network_definition(config.network_file);
  for (std::size_t i = 0; i < def.variables.size(); ++i)
    if (i < def.families.size() && def.families[i]) check_family(*def.families[i], def.variables[i]);

  LdsNetwork out{def, bayesnet::discretize_network(def, config.cpt_samples_per_row, config.network_seed), {}};
  const auto issues = bayesnet::validate_network(out.discrete);
  if (!issues.empty()) throw ValidationError("network does not validate: " + issues.front().message);
  if (out.discrete.variables()[out.discrete.root_index()].cardinality != 2)
    throw ValidationError("root variable must be binary");
  for (const auto& inst : instruments(config))
    for (const auto& id : inst.measured) {
      auto v = out.discrete.find(id);
      if (!v) throw ValidationError("instrument " + inst.name + " measures unknown variable '" + id + "'");
      if (*v == out.discrete.root_index())
        throw ValidationError("instrument " + inst.name + " measures the root variable");
    }
  out.continuous = bayesnet::continuous_network(def);
  return out;
}

std::vector<int> measured_indices(const InstrumentSpec& instrument, const bayesnet::DiscreteBayesNet& net) {
  std::vector<int> idx;
  for (const auto& id : instrument.measured) idx.push_back(net.index_of(id));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::vector<int>> joint_observation_alphabet(const InstrumentSpec& instrument,
                                                         const bayesnet::DiscreteBayesNet& net) {
  const auto idx = measured_indices(instrument, net);
  std::vector<std::vector<int>> out{{}};
  for (int v : idx) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : out)
      for (int b = 0; b < net.variables()[v].cardinality; ++b) {
        auto t = prefix;
        t.push_back(b);
        next.push_back(std::move(t));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace lifeplan::lds
