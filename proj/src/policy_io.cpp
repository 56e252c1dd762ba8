#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lifeplan/hash.hpp"
#include "lifeplan/solver.hpp"

namespace lifeplan::solver {

namespace {

constexpr const char* kMagic = "lifeplan-policy 1";

// Shortest representation that parses back to the same double.
std::string num(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view tok, std::size_t line) {
  double x = 0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
    throw ParseError("policy line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  return x;
}

long parse_long(std::string_view tok, std::size_t line) {
  long x = 0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
    throw ParseError("policy line " + std::to_string(line) + ": bad integer '" + std::string(tok) + "'");
  return x;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string serialize_policy(const AlphaPolicy& p) {
  std::string out;
  out += kMagic;
  out += "\nfingerprint " + to_hex(p.fingerprint);
  out += "\nstates " + std::to_string(p.num_states);
  out += "\nactions " + std::to_string(p.num_actions);
  out += "\ndiscount " + num(p.discount);
  out += "\nlambda " + (p.lambda ? num(*p.lambda) : std::string("none"));
  out += "\nprecision " + num(p.meta.precision);
  out += "\nlower " + num(p.meta.lower);
  out += "\nupper " + num(p.meta.upper);
  out += "\nconverged " + std::to_string(p.meta.converged ? 1 : 0);
  out += "\ntimed_out " + std::to_string(p.meta.timed_out ? 1 : 0);
  out += "\niterations " + std::to_string(p.meta.iterations);
  out += "\nbackups " + std::to_string(p.meta.backups);
  out += "\nwall_seconds " + num(p.meta.wall_seconds);
  out += "\nvectors " + std::to_string(p.vectors.size()) + "\n";
  for (const auto& v : p.vectors) {
    out += "a " + std::to_string(v.action);
    for (double x : v.values) {
      out += ' ';
      out += num(x);
    }
    out += '\n';
  }
  return out;
}

AlphaPolicy parse_policy(std::string_view text) {
  AlphaPolicy p;
  std::size_t line_no = 0, pos = 0;
  long expected_vectors = -1;
  bool header_done = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tok = split(line);
    if (tok.empty()) continue;
    if (line_no == 1) {
      if (line != kMagic && !(line.size() == std::string_view(kMagic).size() + 1 && line.back() == '\r'))
        throw ParseError("not a policy file (missing '" + std::string(kMagic) + "' header)");
      continue;
    }
    auto need = [&](std::size_t n) {
      if (tok.size() != n) throw ParseError("policy line " + std::to_string(line_no) + ": wrong number of fields");
    };
    const std::string_view key = tok[0];
    if (key == "a") {
      if (!header_done) throw ParseError("policy line " + std::to_string(line_no) + ": vector before header");
      if (tok.size() != static_cast<std::size_t>(p.num_states) + 2)
        throw ParseError("policy line " + std::to_string(line_no) + ": expected " + std::to_string(p.num_states) +
                         " values");
      AlphaVector v;
      v.action = static_cast<int>(parse_long(tok[1], line_no));
      if (v.action < 0 || v.action >= p.num_actions)
        throw ParseError("policy line " + std::to_string(line_no) + ": action out of range");
      v.values.reserve(p.num_states);
      for (std::size_t i = 2; i < tok.size(); ++i) v.values.push_back(parse_double(tok[i], line_no));
      p.vectors.push_back(std::move(v));
      continue;
    }
    need(2);
    const std::string_view val = tok[1];
    if (key == "fingerprint") {
      auto r = std::from_chars(val.data(), val.data() + val.size(), p.fingerprint, 16);
      if (r.ec != std::errc() || r.ptr != val.data() + val.size()) throw ParseError("bad fingerprint");
    } else if (key == "states") {
      p.num_states = static_cast<int>(parse_long(val, line_no));
    } else if (key == "actions") {
      p.num_actions = static_cast<int>(parse_long(val, line_no));
    } else if (key == "discount") {
      p.discount = parse_double(val, line_no);
    } else if (key == "lambda") {
      if (val != "none") p.lambda = parse_double(val, line_no);
    } else if (key == "precision") {
      p.meta.precision = parse_double(val, line_no);
    } else if (key == "lower") {
      p.meta.lower = parse_double(val, line_no);
    } else if (key == "upper") {
      p.meta.upper = parse_double(val, line_no);
    } else if (key == "converged") {
      p.meta.converged = parse_long(val, line_no) != 0;
    } else if (key == "timed_out") {
      p.meta.timed_out = parse_long(val, line_no) != 0;
    } else if (key == "iterations") {
      p.meta.iterations = parse_long(val, line_no);
    } else if (key == "backups") {
      p.meta.backups = parse_long(val, line_no);
    } else if (key == "wall_seconds") {
      p.meta.wall_seconds = parse_double(val, line_no);
    } else if (key == "vectors") {
      expected_vectors = parse_long(val, line_no);
      if (p.num_states <= 0 || p.num_actions <= 0) throw ParseError("policy header lacks states/actions");
      header_done = true;
    } else {
      throw ParseError("policy line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (line_no == 0) throw ParseError("empty policy file");
  if (!header_done) throw ParseError("policy file has no 'vectors' line");
  if (static_cast<long>(p.vectors.size()) != expected_vectors)
    throw ParseError("policy file declares " + std::to_string(expected_vectors) + " vectors but holds " +
                     std::to_string(p.vectors.size()));
  return p;
}

void save_policy(const AlphaPolicy& policy, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write policy file '" + path + "'");
    out << serialize_policy(policy);
    if (!out) throw IoError("write failed for '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move policy into '" + path + "'");
}

AlphaPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open policy file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_policy(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace lifeplan::solver
