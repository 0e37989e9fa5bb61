#include "gridcoord/case_io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#ifndef GRIDCOORD_CASES_DIR
#define GRIDCOORD_CASES_DIR "cases"
#endif

namespace gridcoord::io {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw CaseError(CaseError::Kind::Schema, where, what);
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "/" + key, "missing required field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  return v.get<double>();
}

double number_field(const json& obj, const char* key, const std::string& path) {
  return number(member(obj, key, path), path + "/" + key);
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), path + "/" + key);
}

std::size_t index_field(const json& obj, const char* key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    schema_error(path + "/" + key, "expected a non-negative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

std::string string_field(const json& obj, const char* key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_string()) schema_error(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

const json& array_field(const json& obj, const char* key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_array()) schema_error(path + "/" + key, "expected an array");
  return v;
}

BlockOfferStack parse_blocks(const json& obj, const std::string& path) {
  BlockOfferStack stack;
  if (!obj.contains("blocks")) return stack;
  const auto& arr = array_field(obj, "blocks", path);
  for (std::size_t b = 0; b < arr.size(); ++b) {
    const auto at = path + "/blocks/" + std::to_string(b);
    stack.blocks.push_back({number_field(arr[b], "p_max", at), number_field(arr[b], "price", at)});
  }
  return stack;
}

NetworkModel parse_network(const json& doc) {
  const std::string path = "/network";
  const auto& obj = member(doc, "network", "");
  NetworkModel net;
  net.base_mva = number_or(obj, "base_mva", path, 1.0);
  net.u_min = number_field(obj, "u_min", path);
  net.u_max = number_field(obj, "u_max", path);
  net.u_sub = number_field(obj, "u_sub", path);
  net.substation = index_field(obj, "substation", path);

  const auto& nodes = array_field(obj, "nodes", path);
  net.nodes.assign(nodes.size(), NodeLoad{});
  std::vector<bool> seen(nodes.size(), false);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto at = path + "/nodes/" + std::to_string(i);
    const std::size_t id = index_field(nodes[i], "id", at);
    if (id >= nodes.size() || seen[id]) {
      schema_error(at + "/id", "node ids must be unique and dense from 0");
    }
    seen[id] = true;
    net.nodes[id] = {number_or(nodes[i], "lp", at, 0.0), number_or(nodes[i], "lq", at, 0.0)};
  }

  const auto& branches = array_field(obj, "branches", path);
  for (std::size_t j = 0; j < branches.size(); ++j) {
    const auto at = path + "/branches/" + std::to_string(j);
    const auto& b = branches[j];
    net.branches.push_back({index_field(b, "from", at), index_field(b, "to", at),
                            number_field(b, "r", at), number_field(b, "x", at),
                            number_field(b, "pl_max", at), number_field(b, "ql_max", at)});
  }
  return net;
}

AggregatorKind aggregator_kind(const std::string& s, const std::string& path) {
  if (s == "DDGAG") return AggregatorKind::DDGAG;
  if (s == "DRAG") return AggregatorKind::DRAG;
  if (s == "REAG") return AggregatorKind::REAG;
  schema_error(path, "unknown aggregator kind '" + s + "' (DDGAG, DRAG, REAG)");
}

ParticipantKind participant_kind(const std::string& s, const std::string& path) {
  if (s == "Gen") return ParticipantKind::Gen;
  if (s == "DR") return ParticipantKind::DR;
  schema_error(path, "unknown participant kind '" + s + "' (Gen, DR)");
}

// Maps a validation path such as "aggregators[2].blocks[0].price" onto a
// JSON pointer into the case document.
std::string to_pointer(const std::string& path) {
  std::string out = "/";
  for (char c : path) {
    if (c == '.' || c == '[') {
      out += '/';
    } else if (c != ']') {
      out += c;
    }
  }
  return out;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json stack_json(const BlockOfferStack& s) {
  json arr = json::array();
  for (const auto& b : s.blocks) arr.push_back({{"p_max", b.p_max}, {"price", b.price}});
  return arr;
}

}  // namespace

double default_tolerance() {
  if (const char* env = std::getenv("GRIDCOORD_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return 1e-7;
}

Scenario parse_case_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError(CaseError::Kind::Syntax, line_column(text, e.byte == 0 ? 0 : e.byte - 1),
                    "malformed case document");
  }
  if (!doc.is_object()) schema_error("", "case document must be an object");

  Scenario sc;
  sc.network = parse_network(doc);

  if (doc.contains("aggregators")) {
    const auto& arr = array_field(doc, "aggregators", "");
    for (std::size_t a = 0; a < arr.size(); ++a) {
      const auto at = "/aggregators/" + std::to_string(a);
      Aggregator agg;
      agg.id = string_field(arr[a], "id", at);
      agg.kind = aggregator_kind(string_field(arr[a], "kind", at), at + "/kind");
      agg.node = index_field(arr[a], "node", at);
      agg.tan_phi = number_or(arr[a], "tan_phi", at, 0.0);
      agg.offers = parse_blocks(arr[a], at);
      agg.fixed_output = number_or(arr[a], "fixed_output", at, 0.0);
      sc.aggregators.push_back(std::move(agg));
    }
  }
  if (doc.contains("wholesale")) {
    const auto& arr = array_field(doc, "wholesale", "");
    for (std::size_t w = 0; w < arr.size(); ++w) {
      const auto at = "/wholesale/" + std::to_string(w);
      WholesaleParticipant p;
      p.id = string_field(arr[w], "id", at);
      p.kind = participant_kind(string_field(arr[w], "kind", at), at + "/kind");
      p.offers = parse_blocks(arr[w], at);
      sc.wholesale.push_back(std::move(p));
    }
  }
  sc.firm_wholesale_load = number_or(doc, "firm_load", "", 0.0);
  sc.sweep_step = number_or(doc, "sweep_step", "", 0.1);
  sc.tolerance = number_or(doc, "tolerance", "", default_tolerance());
  if (doc.contains("coupling")) {
    const auto& c = doc.at("coupling");
    if (c == "equality") {
      sc.coupling = Coupling::Equality;
    } else if (c == "at_least") {
      sc.coupling = Coupling::AtLeast;
    } else {
      schema_error("/coupling", "expected \"equality\" or \"at_least\"");
    }
  }
  if (doc.contains("q_dso_cap")) sc.q_dso_cap = number(doc.at("q_dso_cap"), "/q_dso_cap");

  if (const auto v = validate(sc); !v.empty()) {
    throw CaseError(CaseError::Kind::Validation, to_pointer(v.front().path), v.front().message);
  }
  return sc;
}

Scenario parse_case(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError(CaseError::Kind::Io, path.string(), "cannot open case file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case_text(buf.str());
}

std::string emit_case(const Scenario& sc) {
  json nodes = json::array();
  for (std::size_t i = 0; i < sc.network.nodes.size(); ++i) {
    nodes.push_back({{"id", i}, {"lp", sc.network.nodes[i].lp}, {"lq", sc.network.nodes[i].lq}});
  }
  json branches = json::array();
  for (const auto& b : sc.network.branches) {
    branches.push_back({{"from", b.from}, {"to", b.to}, {"r", b.r}, {"x", b.x},
                        {"pl_max", b.pl_max}, {"ql_max", b.ql_max}});
  }
  json aggs = json::array();
  for (const auto& a : sc.aggregators) {
    json j = {{"id", a.id}, {"kind", to_string(a.kind)}, {"node", a.node}, {"tan_phi", a.tan_phi}};
    if (a.kind == AggregatorKind::REAG) {
      j["fixed_output"] = a.fixed_output;
    } else {
      j["blocks"] = stack_json(a.offers);
    }
    aggs.push_back(std::move(j));
  }
  json whole = json::array();
  for (const auto& p : sc.wholesale) {
    whole.push_back({{"id", p.id}, {"kind", to_string(p.kind)}, {"blocks", stack_json(p.offers)}});
  }
  json doc = {
      {"network",
       {{"base_mva", sc.network.base_mva},
        {"u_min", sc.network.u_min},
        {"u_max", sc.network.u_max},
        {"u_sub", sc.network.u_sub},
        {"substation", sc.network.substation},
        {"nodes", nodes},
        {"branches", branches}}},
      {"aggregators", aggs},
      {"wholesale", whole},
      {"firm_load", sc.firm_wholesale_load},
      {"sweep_step", sc.sweep_step},
      {"tolerance", sc.tolerance},
      {"coupling", sc.coupling == Coupling::Equality ? "equality" : "at_least"},
  };
  if (sc.q_dso_cap) doc["q_dso_cap"] = *sc.q_dso_cap;
  return doc.dump(2) + "\n";
}

std::filesystem::path resolve_case(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  const fs::path direct(name_or_path);
  if (fs::is_regular_file(direct)) return direct;
  for (const fs::path& dir : {fs::path(GRIDCOORD_CASES_DIR), fs::path("cases")}) {
    const auto candidate = dir / (name_or_path + ".json");
    if (fs::is_regular_file(candidate)) return candidate;
  }
  throw CaseError(CaseError::Kind::Io, name_or_path, "no such case file or bundled case");
}

}  // namespace gridcoord::io
