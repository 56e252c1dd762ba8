#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lifeplan/bayesnet.hpp"
#include "lifeplan/error.hpp"

namespace lifeplan::bayesnet {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "lifeplan-network/1";

std::pair<const char*, const char*> param_names(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Bernoulli: return {"p", nullptr};
    case FamilyKind::TruncatedCount: return {"mean", nullptr};
    case FamilyKind::TruncatedGaussian: return {"mean", "sd"};
    case FamilyKind::BetaScaled: return {"alpha", "beta"};
  }
  return {nullptr, nullptr};
}

template <class T>
T field(const json& obj, const char* name, const std::string& where) {
  if (!obj.contains(name)) throw ParseError(where + ": missing field '" + name + "'");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + name + "' has the wrong type");
  }
}

}  // namespace

NetworkDefinition parse_network_definition(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, json_text.size()); ++i)
      if (json_text[i] == '\n') ++line;
    throw ParseError("network file line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("network file: top level must be an object");
  if (doc.contains("format") && doc["format"] != kFormat)
    throw ParseError("network file: unsupported format '" + doc["format"].dump() + "'");
  if (!doc.contains("variables") || !doc["variables"].is_array())
    throw ParseError("network file: missing 'variables' array");

  NetworkDefinition def;
  for (std::size_t i = 0; i < doc["variables"].size(); ++i) {
    const json& v = doc["variables"][i];
    const std::string where = "variables[" + std::to_string(i) + "]";
    VariableSpec spec;
    spec.id = field<std::string>(v, "id", where);
    spec.cardinality = field<int>(v, "cardinality", where);
    if (v.contains("bin_edges")) spec.bin_edges = field<std::vector<double>>(v, "bin_edges", where);
    if (v.contains("parents")) spec.parents = field<std::vector<std::string>>(v, "parents", where);

    std::optional<ContinuousFamily> family;
    std::optional<ConditionalTable> table;
    if (v.contains("family")) {
      const json& f = v["family"];
      const std::string fw = where + ".family";
      ContinuousFamily fam;
      fam.variable = spec.id;
      fam.kind = family_kind_from_string(field<std::string>(f, "kind", fw));
      if (!f.contains("rows") || !f["rows"].is_array()) throw ParseError(fw + ": missing 'rows' array");
      auto [n1, n2] = param_names(fam.kind);
      for (std::size_t r = 0; r < f["rows"].size(); ++r) {
        const std::string rw = fw + ".rows[" + std::to_string(r) + "]";
        FamilyParams p;
        p.first = field<double>(f["rows"][r], n1, rw);
        if (n2) p.second = field<double>(f["rows"][r], n2, rw);
        fam.rows.push_back(p);
      }
      family = std::move(fam);
    }
    if (v.contains("table")) {
      ConditionalTable t;
      t.variable = spec.id;
      t.rows = field<std::vector<std::vector<double>>>(v, "table", where);
      table = std::move(t);
    }
    if (family && table) throw ParseError(where + ": give either 'family' or 'table', not both");
    def.variables.push_back(std::move(spec));
    def.families.push_back(std::move(family));
    def.tables.push_back(std::move(table));
  }
  return def;
}

NetworkDefinition load_network_definition(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open network file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_network_definition(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string dump_network_definition(const NetworkDefinition& def) {
  json vars = json::array();
  for (std::size_t i = 0; i < def.variables.size(); ++i) {
    const auto& spec = def.variables[i];
    json v;
    v["id"] = spec.id;
    v["cardinality"] = spec.cardinality;
    if (spec.has_edges()) v["bin_edges"] = spec.bin_edges;
    v["parents"] = spec.parents;
    if (i < def.families.size() && def.families[i]) {
      const auto& fam = *def.families[i];
      json rows = json::array();
      auto [n1, n2] = param_names(fam.kind);
      for (const auto& p : fam.rows) {
        json r;
        r[n1] = p.first;
        if (n2) r[n2] = p.second;
        rows.push_back(r);
      }
      v["family"] = {{"kind", std::string(to_string(fam.kind))}, {"rows", rows}};
    }
    if (i < def.tables.size() && def.tables[i]) v["table"] = def.tables[i]->rows;
    vars.push_back(v);
  }
  json doc;
  doc["format"] = kFormat;
  doc["variables"] = vars;
  return doc.dump(2) + "\n";
}

DiscreteBayesNet discretize_network(const NetworkDefinition& def, std::size_t samples_per_row, std::uint64_t seed) {
  std::vector<ConditionalTable> tables;
  for (std::size_t i = 0; i < def.variables.size(); ++i) {
    const auto& spec = def.variables[i];
    if (i < def.tables.size() && def.tables[i]) {
      tables.push_back(*def.tables[i]);
    } else if (i < def.families.size() && def.families[i]) {
      tables.push_back(discretize(*def.families[i], spec, samples_per_row, derive_seed(seed, i)));
    } else if (spec.parents.empty()) {
      ConditionalTable t;
      t.variable = spec.id;
      t.rows.assign(1, std::vector<double>(static_cast<std::size_t>(spec.cardinality), 1.0 / spec.cardinality));
      tables.push_back(std::move(t));
    } else {
      throw ValidationError("variable '" + spec.id + "' has neither a family nor a table");
    }
  }
  return DiscreteBayesNet(def.variables, std::move(tables));
}

ContinuousNetwork continuous_network(const NetworkDefinition& def) {
  return make_continuous_network(def.variables, def.families);
}

}  // namespace lifeplan::bayesnet
