#pragma once

// Configuration ingestion, report/transcript persistence and experiment
// orchestration behind the command-line tool.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lqkd/analysis.hpp"
#include "lqkd/attacks.hpp"
#include "lqkd/error.hpp"
#include "lqkd/nettop.hpp"
#include "lqkd/parallel.hpp"
#include "lqkd/qkd_engine.hpp"
#include "lqkd/resgen.hpp"
#include "lqkd/sqkd_engine.hpp"

namespace lqkd {

using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Rounds to 12 significant digits so serialized reports are stable.
inline double sig12(double x) {
  if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline std::string format12(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what, std::string("malformed JSON: ") + e.what());
  }
}

inline Network load_network(const std::string& path) {
  return network_from_json(parse_json_text(read_text_file(path), "network"));
}

// ---------------------------------------------------------------------------
// Attack specs

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected an array of rows of [re, im] pairs");
  std::vector<std::vector<Complex>> rows;
  for (const auto& row : j) {
    if (!row.is_array()) throw ConfigError(field, "each row must be an array");
    std::vector<Complex> r;
    for (const auto& z : row) {
      if (z.is_number()) {
        r.emplace_back(z.get<double>(), 0.0);
      } else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number()) {
        r.emplace_back(z[0].get<double>(), z[1].get<double>());
      } else {
        throw ConfigError(field, "entries must be numbers or [re, im] pairs");
      }
    }
    rows.push_back(std::move(r));
  }
  for (const auto& r : rows)
    if (r.size() != rows.size()) throw ConfigError(field, "matrix must be square");
  return Matrix::from_rows(rows);
}

inline LegOperator leg_from_json(const nlohmann::json& j, const std::string& field) {
  LegOperator op;
  if (j.is_string()) {
    op.preset = j.get<std::string>();
  } else {
    op.preset = "matrix";
    op.matrix = matrix_from_json(j, field);
  }
  return op;
}

inline ojson leg_to_json(const LegOperator& op) {
  if (!op.matrix) return op.preset;
  ojson rows = ojson::array();
  for (int r = 0; r < op.matrix->rows(); ++r) {
    ojson row = ojson::array();
    for (int c = 0; c < op.matrix->cols(); ++c) row.push_back({sig12((*op.matrix)(r, c).real()), sig12((*op.matrix)(r, c).imag())});
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// {"kind": "cloning", "target": "Bob1", "F": 0.9, "p_attack": 1,
///  "forward": "cnot", "backward": "identity", "ancilla_dim": 2}
inline AttackSpec attack_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("attack", "expected a JSON object");
  AttackSpec a;
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("attack.kind", "expected a string");
  a.kind = attack_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("target")) {
    if (!j["target"].is_string()) throw ConfigError("attack.target", "expected a participant name");
    a.target = j["target"].get<std::string>();
  }
  auto number = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw ConfigError(std::string("attack.") + key, "expected a number");
    dst = j[key].get<double>();
  };
  number("F", a.fidelity);
  number("p_attack", a.p_attack);
  if (j.contains("ancilla_dim")) {
    if (!j["ancilla_dim"].is_number_integer()) throw ConfigError("attack.ancilla_dim", "expected an integer");
    a.ancilla_dim = j["ancilla_dim"].get<int>();
  }
  if (j.contains("forward")) a.forward = detail::leg_from_json(j["forward"], "attack.forward");
  if (j.contains("backward")) a.backward = detail::leg_from_json(j["backward"], "attack.backward");
  a.check();
  return a;
}

inline ojson attack_to_json(const AttackSpec& a) {
  ojson j;
  j["kind"] = to_string(a.kind);
  if (a.kind == AttackKind::none) return j;
  j["target"] = a.target;
  j["p_attack"] = sig12(a.p_attack);
  if (a.kind == AttackKind::cloning) j["F"] = sig12(a.fidelity);
  if (a.kind == AttackKind::two_way) {
    j["forward"] = detail::leg_to_json(a.forward);
    j["backward"] = detail::leg_to_json(a.backward);
    j["ancilla_dim"] = a.ancilla_dim;
  }
  return j;
}

/// Accepts a path to a JSON attack document or a colon-separated preset:
///   none | intercept_resend:<target>[:p] | entangle_measure:<target>[:p]
///   cloning:<target>:<F>[:p] | two_way:<target>:<fwd>:<bwd>
/// where <fwd>/<bwd> are identity, cnot or random:<seed>.
inline AttackSpec parse_attack(const std::string& arg) {
  if (arg.empty() || arg == "none") return {};
  if (std::filesystem::is_regular_file(arg)) return attack_from_json(parse_json_text(read_text_file(arg), "attack"));

  std::vector<std::string> parts;
  std::stringstream ss(arg);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  AttackSpec a;
  a.kind = attack_kind_from_string(parts[0]);
  if (parts.size() < 2) throw ConfigError("attack", "preset needs a target: " + arg);
  a.target = parts[1];
  auto num = [&](std::size_t i, const char* field) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(field, "expected a number, got '" + parts[i] + "'");
    }
  };
  switch (a.kind) {
    case AttackKind::intercept_resend:
    case AttackKind::entangle_measure:
      if (parts.size() > 3) throw ConfigError("attack", "too many fields in '" + arg + "'");
      if (parts.size() == 3) a.p_attack = num(2, "attack.p_attack");
      break;
    case AttackKind::cloning:
      if (parts.size() < 3 || parts.size() > 4) throw ConfigError("attack.F", "cloning preset is cloning:<target>:<F>[:p]");
      a.fidelity = num(2, "attack.F");
      if (parts.size() == 4) a.p_attack = num(3, "attack.p_attack");
      break;
    case AttackKind::two_way: {
      std::vector<std::string> legs;
      for (std::size_t i = 2; i < parts.size(); ++i) {
        if (parts[i] == "random" && i + 1 < parts.size()) {
          legs.push_back("random:" + parts[i + 1]);
          ++i;
        } else {
          legs.push_back(parts[i]);
        }
      }
      if (legs.size() != 2) throw ConfigError("attack", "two-way preset is two_way:<target>:<forward>:<backward>");
      a.forward.preset = legs[0];
      a.backward.preset = legs[1];
      break;
    }
    default:
      break;
  }
  a.check();
  return a;
}

// ---------------------------------------------------------------------------
// Report serialization

inline ojson report_to_json(const Report& rep, const Network& net) {
  ojson j;
  j["protocol"] = rep.protocol;
  j["rounds"] = rep.rounds;
  j["abort"] = rep.abort;
  ojson parts = ojson::array();
  for (const auto& p : rep.participants) {
    ojson o;
    o["name"] = p.name;
    o["checked"] = p.checked;
    o["mismatches"] = p.mismatches;
    o["qber"] = sig12(p.qber);
    o["qber_ci95"] = {sig12(p.ci.lo), sig12(p.ci.hi)};
    if (rep.protocol != "qkd") {
      o["measured_compared"] = p.measured_compared;
      o["measured_mismatches"] = p.measured_mismatches;
    }
    parts.push_back(o);
  }
  j["participants"] = parts;
  ojson layers = ojson::array();
  for (const auto& l : rep.layers) {
    ojson o;
    o["name"] = l.name;
    o["alphabet"] = l.alphabet;
    o["retained"] = l.retained;
    o["retention_fraction"] = sig12(l.rate.retention_fraction);
    o["checked"] = l.checked;
    o["mismatches"] = l.mismatches;
    o["qber"] = sig12(l.qber);
    o["key_length"] = l.rate.key_length;
    o["entropy_bits"] = sig12(l.rate.entropy);
    o["symbols_per_transmission"] = sig12(l.rate.symbols_per_transmission);
    o["bits_per_transmission"] = sig12(l.rate.bits_per_transmission);
    o["keys_agree"] = l.agreement;
    ojson mm = ojson::object(), mo = ojson::object();
    for (const auto& [k, v] : l.mi_member) mm[k] = sig12(v);
    for (const auto& [k, v] : l.mi_outsider) mo[k] = sig12(v);
    o["mi_hub_member_bits"] = mm;
    o["mi_outsider_bits"] = mo;
    layers.push_back(o);
  }
  j["layers"] = layers;
  ojson eve;
  eve["kind"] = rep.eve.kind;
  if (rep.eve.kind != "none") {
    eve["target"] = rep.eve.target;
    eve["attacked_rounds"] = rep.eve.attacked_rounds;
    ojson info = ojson::object();
    for (const auto& [k, v] : rep.eve.info_bits) info[k] = sig12(v);
    eve["info_bits"] = info;
  }
  j["eve"] = eve;
  ojson comp = ojson::array(), secure = ojson::array();
  for (ParticipantId p : rep.pinpoint.compromised) comp.push_back(net.participants[static_cast<std::size_t>(p)]);
  for (int r : rep.pinpoint.secure_layers) secure.push_back(net.layers[static_cast<std::size_t>(r)].name);
  j["pinpoint"] = {{"compromised", comp}, {"secure_layers", secure}};
  return j;
}

// ---------------------------------------------------------------------------
// Transcripts (CSV). List-valued cells are ';'-separated.

namespace detail {

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::vector<int> split_ints(const std::string& cell, const std::string& what) {
  std::vector<int> out;
  if (cell.empty()) return out;
  std::stringstream ss(cell);
  for (std::string tok; std::getline(ss, tok, ';');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(what, "bad integer '" + tok + "'");
    }
  }
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline void eve_from_cells(const std::vector<std::string>& c, std::size_t at, EveRecord& e, const std::string& where) {
  e.attacked = c[at] == "1";
  e.basis = split_ints(c[at + 1], where).at(0);
  e.outcome = split_ints(c[at + 2], where).at(0);
}

}  // namespace detail

inline const char* kQkdTranscriptHeader = "round,set,state,bases,outcomes,retained,check,eve_attacked,eve_basis,eve_outcome";
inline const char* kSqkdTranscriptHeader =
    "round,set,state,actions,bob_outcomes,alice_outcomes,retained,eve_attacked,eve_basis,eve_outcome";

inline std::string qkd_transcript_csv(const std::vector<QkdRound>& t) {
  std::string out = std::string(kQkdTranscriptHeader) + "\n";
  for (const auto& rd : t) {
    out += std::to_string(rd.index) + ',' + std::to_string(rd.set) + ',' + std::to_string(rd.state) + ',' +
           detail::join(rd.bases) + ',' + detail::join(rd.outcomes) + ',' + detail::join(rd.retained) + ',' +
           (rd.check ? "1" : "0") + ',' + (rd.eve.attacked ? "1" : "0") + ',' + std::to_string(rd.eve.basis) + ',' +
           std::to_string(rd.eve.outcome) + '\n';
  }
  return out;
}

inline std::string sqkd_transcript_csv(const std::vector<SqkdRound>& t) {
  std::string out = std::string(kSqkdTranscriptHeader) + "\n";
  for (const auto& rd : t) {
    std::string acts;
    for (std::size_t i = 0; i < rd.actions.size(); ++i) {
      if (i) acts += ';';
      acts += rd.actions[i] == ClassicalAction::reflect ? 'R' : 'M';
    }
    out += std::to_string(rd.index) + ',' + std::to_string(rd.set) + ',' + std::to_string(rd.state) + ',' + acts + ',' +
           detail::join(rd.bob_outcomes) + ',' + detail::join(rd.alice_outcomes) + ',' + detail::join(rd.retained) + ',' +
           (rd.eve.attacked ? "1" : "0") + ',' + std::to_string(rd.eve.basis) + ',' + std::to_string(rd.eve.outcome) + '\n';
  }
  return out;
}

struct ParsedTranscript {
  bool sqkd = false;
  std::vector<QkdRound> qkd;
  std::vector<SqkdRound> sq;
};

/// Reads either transcript flavour, validated against the plan's shape.
inline ParsedTranscript parse_transcript(const std::string& text, const ResourcePlan& plan) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw ConfigError("transcript", "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ParsedTranscript out;
  if (line == kSqkdTranscriptHeader)
    out.sqkd = true;
  else if (line != kQkdTranscriptHeader)
    throw ConfigError("transcript", "unrecognized header");

  const std::size_t parties = plan.parties.size();
  const auto n_states = static_cast<int>(plan.state_count());
  std::size_t row = 0;
  while (std::getline(ss, line)) {
    if (line.empty() || line == "\r") continue;
    const std::string where = "transcript row " + std::to_string(row + 1);
    const auto c = detail::split_csv_line(line);
    if (c.size() != 10) throw ConfigError(where, "expected 10 columns");
    const auto head = detail::split_ints(c[0] + ";" + c[1] + ";" + c[2], where);
    if (head[0] != static_cast<int>(row)) throw ConfigError(where, "rounds must be numbered 0, 1, ...");
    if (head[1] != 1 && head[1] != 2) throw ConfigError(where, "set must be 1 or 2");
    if (head[2] < 0 || head[2] >= n_states) throw ConfigError(where, "state index out of range");
    auto check_outcomes = [&](const std::vector<int>& v, bool allow_none) {
      if (v.size() != parties) throw ConfigError(where, "wrong number of per-party entries");
      for (std::size_t i = 0; i < parties; ++i)
        if (v[i] >= plan.parties[i].dim || v[i] < (allow_none ? -1 : 0)) throw ConfigError(where, "outcome out of range");
    };
    auto check_layers = [&](const std::vector<int>& v) {
      for (int r : v)
        if (r < 0 || r >= static_cast<int>(plan.layer_count())) throw ConfigError(where, "layer index out of range");
    };
    if (!out.sqkd) {
      QkdRound rd;
      rd.index = row;
      rd.set = head[1];
      rd.state = head[2];
      rd.bases = detail::split_ints(c[3], where);
      if (rd.bases.size() != parties) throw ConfigError(where, "wrong number of bases");
      for (int b : rd.bases)
        if (b != 1 && b != 2) throw ConfigError(where, "basis must be 1 or 2");
      rd.outcomes = detail::split_ints(c[4], where);
      check_outcomes(rd.outcomes, false);
      rd.retained = detail::split_ints(c[5], where);
      check_layers(rd.retained);
      rd.check = c[6] == "1";
      detail::eve_from_cells(c, 7, rd.eve, where);
      out.qkd.push_back(std::move(rd));
    } else {
      SqkdRound rd;
      rd.index = row;
      rd.set = head[1];
      rd.state = head[2];
      std::stringstream as(c[3]);
      for (std::string tok; std::getline(as, tok, ';');) {
        if (tok == "M") rd.actions.push_back(ClassicalAction::measure_resend);
        else if (tok == "R") rd.actions.push_back(ClassicalAction::reflect);
        else throw ConfigError(where, "action must be M or R");
      }
      if (rd.actions.size() != parties) throw ConfigError(where, "wrong number of actions");
      rd.bob_outcomes = detail::split_ints(c[4], where);
      check_outcomes(rd.bob_outcomes, true);
      rd.alice_outcomes = detail::split_ints(c[5], where);
      check_outcomes(rd.alice_outcomes, false);
      rd.retained = detail::split_ints(c[6], where);
      check_layers(rd.retained);
      detail::eve_from_cells(c, 7, rd.eve, where);
      out.sq.push_back(std::move(rd));
    }
    ++row;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prepared-state listing

namespace detail {

inline std::string state_label(const ResourcePlan& plan, const SeparableState& st, int set_id) {
  std::string s = "|";
  for (std::size_t i = 0; i < plan.parties.size(); ++i) {
    const int v = st.local_values[i];
    const int d = plan.parties[i].dim;
    if (i && d > 10) s += ',';
    if (set_id == 2 && d == 2) s += v == 0 ? "+" : "-";
    else s += std::to_string(v) + (set_id == 2 ? "'" : "");
  }
  return s + ">";
}

}  // namespace detail

inline ojson plan_to_json(const ResourcePlan& plan) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = plan.truncated ? "truncated" : "general";
  j["network"] = network_to_json(plan.network);
  ojson parties = ojson::array();
  for (const auto& ps : plan.parties) {
    ojson layers = ojson::array();
    for (int r : ps.layers) layers.push_back(plan.network.layers[static_cast<std::size_t>(r)].name);
    parties.push_back({{"name", plan.network.participants[static_cast<std::size_t>(ps.participant)]},
                       {"dim", ps.dim},
                       {"radices", ps.radices},
                       {"layers", layers}});
  }
  j["parties"] = parties;
  ojson sets = ojson::array();
  for (int id = 1; id <= 2; ++id) {
    ojson states = ojson::array();
    const auto& set = plan.set(id);
    for (std::size_t t = 0; t < set.states.size(); ++t) {
      const auto& st = set.states[t];
      ojson locals = ojson::array();
      for (std::size_t i = 0; i < plan.parties.size(); ++i)
        locals.push_back({{"name", plan.network.participants[static_cast<std::size_t>(plan.parties[i].participant)]},
                          {"basis", id == 1 ? "computational" : "fourier"},
                          {"index", st.local_values[i]}});
      states.push_back({{"index", t},
                        {"label", detail::state_label(plan, st, id)},
                        {"layer_symbols", st.layer_symbols},
                        {"parties", locals}});
    }
    sets.push_back({{"set", id}, {"states", states}});
  }
  j["sets"] = sets;
  return j;
}

// ---------------------------------------------------------------------------
// Experiments

enum class Protocol { qkd, sqkd, boyer };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::qkd: return "qkd";
    case Protocol::sqkd: return "sqkd";
    case Protocol::boyer: return "boyer";
  }
  return "qkd";
}

struct Sweep {
  std::string param;
  std::vector<double> values;
};

/// Parses "<param>=<v1,v2,...>".
inline Sweep parse_sweep(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("sweep", "expected <param>=<v1,v2,...>");
  Sweep s;
  s.param = arg.substr(0, eq);
  std::stringstream ss(arg.substr(eq + 1));
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      s.values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("sweep", "bad value '" + tok + "'");
    }
  }
  if (s.values.empty()) throw ConfigError("sweep", "no values");
  return s;
}

struct ExperimentSpec {
  Protocol protocol = Protocol::qkd;
  Network network;
  bool truncated = false;
  std::size_t rounds = 10000;      // qkd
  std::size_t key_length = 256;    // sqkd, boyer
  double delta = kDefaultDelta;    // sqkd, boyer
  double check_fraction = kDefaultCheckFraction;
  std::uint64_t seed = 1;
  AttackSpec attack;
  std::optional<Sweep> sweep;
  std::string out_dir = ".";
  bool transcript = false;
  unsigned threads = 0;

  void check() const {
    if (protocol != Protocol::boyer) require_valid(network);
    if (!sweep) return;
    const std::string& p = sweep->param;
    const bool known = p == "F" || p == "l" || p == "seed" || p == "rounds" || p == "key_length" || p == "delta" ||
                       p == "check_fraction" || p == "p_attack";
    if (!known) throw ConfigError("sweep", "unknown parameter '" + p + "'");
    if (p == "F" && attack.kind != AttackKind::cloning) throw ConfigError("sweep", "F needs a cloning attack");
    if (p == "l" && (attack.kind != AttackKind::intercept_resend || protocol != Protocol::qkd))
      throw ConfigError("sweep", "l needs run-qkd with an intercept_resend attack");
    if (p == "p_attack" && attack.kind == AttackKind::none) throw ConfigError("sweep", "p_attack needs an attack");
    if ((p == "rounds" || p == "check_fraction") && protocol != Protocol::qkd)
      throw ConfigError("sweep", p + " applies to run-qkd only");
    if ((p == "key_length" || p == "delta") && protocol == Protocol::qkd)
      throw ConfigError("sweep", p + " applies to run-sqkd and run-boyer only");
    for (double v : sweep->values) {
      if ((p == "rounds" || p == "key_length" || p == "l" || p == "seed") && (v < 0 || v != std::floor(v)))
        throw ConfigError("sweep", p + " values must be non-negative integers");
      if (p == "l" && v < 1) throw ConfigError("sweep", "l values must be at least 1");
    }
  }
};

inline ojson config_to_json(const ExperimentSpec& s) {
  ojson j;
  j["protocol"] = to_string(s.protocol);
  if (s.protocol == Protocol::boyer) {
    j["network"] = network_to_json(two_party_network(2));
  } else {
    j["network"] = network_to_json(s.network);
    j["mode"] = s.truncated ? "truncated" : "general";
  }
  if (s.protocol == Protocol::qkd) {
    j["rounds"] = s.rounds;
    j["check_fraction"] = sig12(s.check_fraction);
  } else {
    j["key_length"] = s.key_length;
    j["delta"] = sig12(s.delta);
    j["rounds"] = sqkd_round_count(s.key_length, s.delta);
  }
  j["seed"] = s.seed;
  j["attack"] = attack_to_json(s.attack);
  return j;
}

/// One simulated point: canonical report plus whatever the sweep columns need.
struct PointResult {
  ojson document;
  Report report;
  ResourcePlan plan;
  std::vector<QkdRound> qkd;
  std::vector<SqkdRound> sq;
};

inline PointResult run_point(const ExperimentSpec& s) {
  PointResult out;
  if (s.protocol == Protocol::qkd) {
    QkdConfig c{s.network, s.truncated, s.rounds, s.check_fraction, s.seed, s.attack, s.threads};
    auto run = run_qkd(c);
    out.report = std::move(run.report);
    out.plan = std::move(run.plan);
    out.qkd = std::move(run.transcript);
  } else if (s.protocol == Protocol::sqkd) {
    SqkdConfig c{s.network, s.truncated, s.key_length, s.delta, s.seed, s.attack, s.threads};
    auto run = run_sqkd(c);
    out.report = std::move(run.report);
    out.plan = std::move(run.plan);
    out.sq = std::move(run.transcript);
  } else {
    auto run = run_boyer_baseline(s.key_length, s.delta, s.seed, s.attack, s.threads);
    out.report = std::move(run.report);
    out.plan = std::move(run.plan);
    out.sq = std::move(run.transcript);
  }
  out.document["schema_version"] = kSchemaVersion;
  out.document["config"] = config_to_json(s);
  out.document["report"] = report_to_json(out.report, out.plan.network);
  return out;
}

namespace detail {

/// Intercept-resend detection over blocks of l qualifying rounds (target
/// measured in the hub's basis, Eve in the other one).
struct BlockDetection {
  std::size_t blocks = 0;
  std::size_t detected = 0;
};

inline BlockDetection block_detection(const PointResult& r, int target, int l) {
  BlockDetection b;
  const auto ti = static_cast<std::size_t>(target);
  int in_block = 0;
  bool hit = false;
  for (const auto& rd : r.qkd) {
    if (!rd.eve.attacked || rd.bases[ti] != rd.set || rd.eve.basis == rd.set) continue;
    const auto& st = r.plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    hit = hit || rd.outcomes[ti] != st.local_values[ti];
    if (++in_block == l) {
      ++b.blocks;
      if (hit) ++b.detected;
      in_block = 0;
      hit = false;
    }
  }
  return b;
}

/// Hub local value vs target outcome on rounds where the target measured in
/// the hub's basis.
inline double empirical_hub_target_mi(const PointResult& r, int target) {
  std::vector<int> xs, ys;
  const auto ti = static_cast<std::size_t>(target);
  for (const auto& rd : r.qkd) {
    if (rd.bases[ti] != rd.set) continue;
    xs.push_back(r.plan.set(rd.set).states[static_cast<std::size_t>(rd.state)].local_values[ti]);
    ys.push_back(rd.outcomes[ti]);
  }
  return xs.empty() ? std::nan("") : empirical_mi(xs, ys);
}

}  // namespace detail

/// Runs every sweep point (concurrently, each owning its spec) and returns
/// CSV text with one row per value, in the order given.
inline std::string run_sweep(const ExperimentSpec& base) {
  base.check();
  const Sweep& sw = *base.sweep;
  const std::size_t n = sw.values.size();
  std::vector<std::string> rows(n);
  std::string header;
  std::mutex header_mu;
  const unsigned outer = worker_count(base.threads);

  parallel_for(n, outer, [&](std::size_t k) {
    ExperimentSpec s = base;
    s.sweep.reset();
    s.threads = n > 1 ? 1 : base.threads;
    const double v = sw.values[k];
    int l = 0;
    if (sw.param == "F") s.attack.fidelity = v;
    else if (sw.param == "l") l = static_cast<int>(v);
    else if (sw.param == "seed") s.seed = static_cast<std::uint64_t>(v);
    else if (sw.param == "rounds") s.rounds = static_cast<std::size_t>(v);
    else if (sw.param == "key_length") s.key_length = static_cast<std::size_t>(v);
    else if (sw.param == "delta") s.delta = v;
    else if (sw.param == "check_fraction") s.check_fraction = v;
    else if (sw.param == "p_attack") s.attack.p_attack = v;
    s.attack.check();

    const PointResult r = run_point(s);
    const Report& rep = r.report;
    std::vector<std::pair<std::string, std::string>> cols;
    cols.emplace_back("param", sw.param);
    cols.emplace_back("value", format12(v));
    cols.emplace_back("abort", rep.abort ? "1" : "0");
    cols.emplace_back("rounds", std::to_string(rep.rounds));
    for (const auto& p : rep.participants) cols.emplace_back("qber_" + p.name, format12(p.qber));
    for (const auto& ls : rep.layers) {
      cols.emplace_back("key_length_" + ls.name, std::to_string(ls.rate.key_length));
      cols.emplace_back("entropy_" + ls.name, format12(ls.rate.entropy));
    }

    int target = -1;
    if (s.attack.kind != AttackKind::none) {
      const auto id = r.plan.network.find(s.attack.target);
      if (id) target = r.plan.party_index(*id);
    }
    if (sw.param == "F" && target >= 0) {
      const int d = r.plan.parties[static_cast<std::size_t>(target)].dim;
      double i_ab = symmetric_channel_information(d, v), f_e = std::nan(""), i_ae = std::nan("");
      std::string valid;
      if (d == 2) {
        const auto m = mi_cloning_qubit(v);
        f_e = m.f_e;
        i_ae = m.i_ae;
        valid = m.valid ? "1" : "0";
      } else if (d == 4) {
        const auto m = mi_cloning_ququart(v);
        f_e = m.f_e;
        i_ae = m.i_ae;
        valid = m.valid ? "1" : "0";
      }
      cols.emplace_back("target_checked", std::to_string(rep.participants[static_cast<std::size_t>(target)].checked));
      cols.emplace_back("i_ab_analytic", format12(i_ab));
      cols.emplace_back("i_ab_empirical", s.protocol == Protocol::qkd ? format12(detail::empirical_hub_target_mi(r, target)) : "");
      cols.emplace_back("f_e", format12(f_e));
      cols.emplace_back("i_ae", format12(i_ae));
      cols.emplace_back("formula_valid", valid);
      double info = 0.0;
      for (const auto& [layer, bits] : rep.eve.info_bits) info = std::max(info, bits);
      cols.emplace_back("eve_info_bits", format12(info));
    }
    if (sw.param == "l" && target >= 0) {
      const auto b = detail::block_detection(r, target, l);
      const int d = r.plan.parties[static_cast<std::size_t>(target)].dim;
      cols.emplace_back("blocks", std::to_string(b.blocks));
      cols.emplace_back("detected", std::to_string(b.detected));
      cols.emplace_back("detection_frequency",
                        b.blocks == 0 ? "" : format12(static_cast<double>(b.detected) / static_cast<double>(b.blocks)));
      cols.emplace_back("detection_expected", format12(detection_probability_intercept(d, l)));
    }

    std::string h, row;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) {
        h += ',';
        row += ',';
      }
      h += cols[c].first;
      row += cols[c].second;
    }
    rows[k] = row;
    std::lock_guard lock(header_mu);
    if (header.empty()) header = h;
  });

  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

/// Writes report.json (and transcript.csv when requested) or, for sweeps,
/// sweep.csv into spec.out_dir. Returns the paths written.
inline std::vector<std::string> run_experiment(const ExperimentSpec& spec) {
  spec.check();
  std::filesystem::create_directories(spec.out_dir);
  const std::filesystem::path dir(spec.out_dir);
  std::vector<std::string> written;
  if (spec.sweep) {
    const auto path = (dir / "sweep.csv").string();
    write_text_file(path, run_sweep(spec));
    written.push_back(path);
    return written;
  }
  const PointResult r = run_point(spec);
  const auto report_path = (dir / "report.json").string();
  write_text_file(report_path, r.document.dump(2) + "\n");
  written.push_back(report_path);
  if (spec.transcript) {
    const auto path = (dir / "transcript.csv").string();
    write_text_file(path, spec.protocol == Protocol::qkd ? qkd_transcript_csv(r.qkd) : sqkd_transcript_csv(r.sq));
    written.push_back(path);
  }
  return written;
}

/// Re-derives the report from a saved transcript.
inline ojson analyze_transcript(const std::string& text, const Network& net, bool truncated, const AttackSpec& attack) {
  const ResourcePlan plan = compile_plan(net, truncated);
  const Adversary adv(attack, plan);
  const auto parsed = parse_transcript(text, plan);
  const Report rep = parsed.sqkd ? analyze_sqkd(plan, parsed.sq, adv) : analyze_qkd(plan, parsed.qkd, adv);
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = {{"network", network_to_json(net)},
                 {"mode", truncated ? "truncated" : "general"},
                 {"attack", attack_to_json(attack)}};
  j["report"] = report_to_json(rep, net);
  return j;
}

}  // namespace lqkd
