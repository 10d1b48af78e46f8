#include "rcp/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace rcp::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Shortest decimal that parses back to the same double.
std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

ordered_json vec_j(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json mat_j(const Mat& m) {
  ordered_json a = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

Vec vec_from(const json& a, const std::string& what) {
  if (!a.is_array()) throw std::invalid_argument(what + " must be an array");
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

Mat mat_from(const json& a, const std::string& what) {
  if (!a.is_array() || a.empty()) throw std::invalid_argument(what + " must be a nonempty array");
  const size_t cols = a[0].size();
  Mat m(a.size(), cols);
  for (size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != cols) throw std::invalid_argument(what + " rows differ in length");
    for (size_t c = 0; c < cols; ++c) m(r, c) = a[r][c].get<double>();
  }
  return m;
}

ordered_json target_j(const TargetSet& t) {
  return {{"x_lo", t.x_lo}, {"x_hi", t.x_hi}, {"successor", t.successor}};
}

TargetSet target_from(const json& j) {
  return {j.at("x_lo").get<double>(), j.at("x_hi").get<double>(),
          j.at("successor").get<std::string>()};
}

ordered_json tri_j(const Triangulation& tri) {
  ordered_json verts = ordered_json::array();
  for (size_t i = 0; i < tri.vertices.size(); ++i) {
    std::string name = i < tri.names.size() ? tri.names[i] : "v" + std::to_string(i);
    verts.push_back({{"name", name}, {"coords", vec_j(tri.vertices[i])}});
  }
  ordered_json simps = ordered_json::array();
  for (const auto& labels : tri.simplices) simps.push_back(labels);
  return {{"vertices", std::move(verts)}, {"simplices", std::move(simps)}};
}

Triangulation tri_from(const json& j) {
  Triangulation tri;
  for (const auto& v : j.at("vertices")) {
    tri.names.push_back(v.at("name").get<std::string>());
    tri.vertices.push_back(vec_from(v.at("coords"), "vertex coords"));
  }
  for (const auto& s : j.at("simplices")) {
    std::vector<int> labels = s.get<std::vector<int>>();
    for (int l : labels) {
      if (l < 0 || l >= static_cast<int>(tri.vertices.size())) {
        throw std::invalid_argument("simplex references vertex " + std::to_string(l) +
                                    " outside the table");
      }
    }
    tri.simplices.push_back(std::move(labels));
  }
  tri.build_adjacency();
  return tri;
}

const char* role_name(FacetRole r) { return r == FacetRole::exit ? "exit" : "restricted"; }

FacetRole role_from(const std::string& s) {
  if (s == "exit") return FacetRole::exit;
  if (s == "restricted") return FacetRole::restricted;
  throw std::invalid_argument("unknown facet role '" + s + "'");
}

std::string csv_table(const char* header,
                      const std::function<std::string(size_t)>& line, size_t n) {
  std::string out = header;
  out += '\n';
  for (size_t i = 0; i < n; ++i) {
    out += line(i);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed on " + p.string());
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& p) { return sha256_bytes(read_file(p)); }

std::string trajectory_csv(const std::vector<LogRow>& rows) {
  return csv_table(
      "t,x,xdot,u,theta_d,simplex,mode,S1,S2,S3,L1,L2,L3",
      [&](size_t i) {
        const LogRow& r = rows[i];
        std::string line = num(r.t) + ',' + num(r.s(0)) + ',' + num(r.s(1)) + ',' +
                           num(r.u.size() ? r.u(0) : 0.0) + ',' + num(r.theta_d) + ',' +
                           std::to_string(r.simplex) + ',' + r.mode;
        for (int k = 0; k < 3; ++k) {
          bool ok = k < static_cast<int>(r.flags.safety.size()) ? r.flags.safety[k] : true;
          line += ok ? ",1" : ",0";
        }
        for (int k = 0; k < 3; ++k) {
          bool ok = k < static_cast<int>(r.flags.liveness.size()) ? r.flags.liveness[k] : true;
          line += ok ? ",1" : ",0";
        }
        return line;
      },
      rows.size());
}

std::string events_csv(const std::vector<EventRow>& events) {
  return csv_table(
      "t,kind,detail",
      [&](size_t i) { return num(events[i].t) + ',' + events[i].kind + ',' + events[i].detail; },
      events.size());
}

std::string phase_csv(const std::vector<LogRow>& rows) {
  return csv_table(
      "x,xdot", [&](size_t i) { return num(rows[i].s(0)) + ',' + num(rows[i].s(1)); },
      rows.size());
}

std::string position_csv(const std::vector<LogRow>& rows) {
  return csv_table(
      "t,x", [&](size_t i) { return num(rows[i].t) + ',' + num(rows[i].s(0)); }, rows.size());
}

std::string design_json(const DesignDoc& doc) {
  ordered_json j;
  j["version"] = "1";
  j["mode"] = doc.mode_name;
  if (!doc.reflected_name.empty()) j["reflected"] = doc.reflected_name;
  j["triangulation"] = tri_j(doc.tri);
  ordered_json region = ordered_json::array();
  for (const auto& h : doc.region) region.push_back({{"c", vec_j(h.c)}, {"d", h.d}});
  j["region"] = std::move(region);
  ordered_json roles = ordered_json::array();
  for (const auto& per_simplex : doc.roles) {
    ordered_json facets = ordered_json::array();
    for (FacetRole r : per_simplex) facets.push_back(role_name(r));
    roles.push_back(std::move(facets));
  }
  j["roles"] = std::move(roles);
  j["target"] = target_j(doc.target);
  ordered_json disc = ordered_json::array();
  for (int v : doc.cont.discontinuity_vertices) {
    ordered_json entry{{"vertex", v}};
    auto it = doc.cont.groups.find(v);
    if (it != doc.cont.groups.end()) entry["groups"] = it->second;
    disc.push_back(std::move(entry));
  }
  j["discontinuity"] = std::move(disc);
  ordered_json pins = ordered_json::array();
  for (const auto& p : doc.cont.pins) {
    pins.push_back({{"vertex", p.vertex},
                    {"group", p.group},
                    {"lo", vec_j(p.lo)},
                    {"hi", vec_j(p.hi)}});
  }
  j["pins"] = std::move(pins);
  return j.dump(2) + "\n";
}

DesignDoc parse_design(const std::string& text) {
  json j = json::parse(text);
  DesignDoc doc;
  doc.mode_name = j.at("mode").get<std::string>();
  doc.reflected_name = j.value("reflected", "");
  doc.tri = tri_from(j.at("triangulation"));
  for (const auto& h : j.at("region")) {
    doc.region.push_back({vec_from(h.at("c"), "region row"), h.at("d").get<double>()});
  }
  for (const auto& per_simplex : j.at("roles")) {
    std::vector<FacetRole> facets;
    for (const auto& r : per_simplex) facets.push_back(role_from(r.get<std::string>()));
    doc.roles.push_back(std::move(facets));
  }
  if (doc.roles.size() != doc.tri.simplices.size()) {
    throw std::invalid_argument("roles table does not match the simplex count");
  }
  doc.target = target_from(j.at("target"));
  for (const auto& entry : j.value("discontinuity", json::array())) {
    int v = entry.at("vertex").get<int>();
    doc.cont.discontinuity_vertices.push_back(v);
    if (entry.contains("groups")) {
      doc.cont.groups[v] = entry.at("groups").get<std::vector<std::vector<int>>>();
    }
  }
  for (const auto& p : j.value("pins", json::array())) {
    VertexPin pin;
    pin.vertex = p.at("vertex").get<int>();
    pin.group = p.value("group", -1);
    pin.lo = vec_from(p.at("lo"), "pin lo");
    pin.hi = vec_from(p.at("hi"), "pin hi");
    doc.cont.pins.push_back(std::move(pin));
  }
  return doc;
}

std::string dynamics_json(const DynamicsDoc& doc) {
  ordered_json j;
  j["version"] = "1";
  j["A"] = mat_j(doc.dyn.A);
  j["B"] = mat_j(doc.dyn.B);
  j["a"] = vec_j(doc.dyn.a);
  j["u_lo"] = vec_j(doc.u_lo);
  j["u_hi"] = vec_j(doc.u_hi);
  j["margin"] = doc.margin;
  return j.dump(2) + "\n";
}

DynamicsDoc parse_dynamics(const std::string& text) {
  json j = json::parse(text);
  DynamicsDoc doc;
  doc.dyn.A = mat_from(j.at("A"), "A");
  doc.dyn.B = mat_from(j.at("B"), "B");
  doc.dyn.a = vec_from(j.at("a"), "a");
  doc.u_lo = vec_from(j.at("u_lo"), "u_lo");
  doc.u_hi = vec_from(j.at("u_hi"), "u_hi");
  doc.margin = j.value("margin", 1e-6);
  if (doc.dyn.A.rows() != doc.dyn.A.cols() || doc.dyn.B.rows() != doc.dyn.A.rows() ||
      doc.dyn.a.size() != doc.dyn.A.rows()) {
    throw std::invalid_argument("dynamics dimensions disagree");
  }
  if (doc.u_lo.size() != doc.dyn.B.cols() || doc.u_hi.size() != doc.dyn.B.cols()) {
    throw std::invalid_argument("control bounds do not match the input count");
  }
  return doc;
}

std::string bundle_json(const HybridController& hc,
                        const std::map<std::string, std::string>& provenance) {
  ordered_json j;
  j["version"] = "1";
  j["provenance"] = provenance;
  j["margin"] = hc.margin;
  j["u_lo"] = vec_j(hc.u_lo);
  j["u_hi"] = vec_j(hc.u_hi);
  j["dynamics"] = {{"A", mat_j(hc.dyn.A)}, {"B", mat_j(hc.dyn.B)}, {"a", vec_j(hc.dyn.a)}};
  j["triangulation"] = tri_j(hc.tri);
  ordered_json modes;
  for (const auto& [name, mode] : hc.modes) {
    ordered_json m;
    m["target"] = target_j(mode.target);
    m["discontinuity_vertices"] = mode.discontinuity_vertices;
    ordered_json roles = ordered_json::array();
    for (const auto& per_simplex : mode.roles) {
      ordered_json facets = ordered_json::array();
      for (FacetRole r : per_simplex) facets.push_back(role_name(r));
      roles.push_back(std::move(facets));
    }
    m["roles"] = std::move(roles);
    ordered_json ctrls = ordered_json::array();
    for (const auto& [sid, sc] : mode.ctrl.by_simplex) {
      ordered_json u = ordered_json::array();
      for (const Vec& ui : sc.vertex_controls) u.push_back(vec_j(ui));
      ctrls.push_back({{"simplex", sid},
                       {"K", mat_j(sc.K)},
                       {"g", vec_j(sc.g)},
                       {"u", std::move(u)}});
    }
    m["controllers"] = std::move(ctrls);
    modes[name] = std::move(m);
  }
  j["modes"] = std::move(modes);
  return j.dump(2) + "\n";
}

BundleDoc parse_bundle(const std::string& text) {
  json j = json::parse(text);
  BundleDoc doc;
  doc.version = j.value("version", "1");
  if (j.contains("provenance")) {
    for (const auto& [k, v] : j.at("provenance").items()) {
      doc.provenance[k] = v.get<std::string>();
    }
  }
  HybridController& hc = doc.hc;
  hc.margin = j.at("margin").get<double>();
  hc.u_lo = vec_from(j.at("u_lo"), "u_lo");
  hc.u_hi = vec_from(j.at("u_hi"), "u_hi");
  const json& dyn = j.at("dynamics");
  hc.dyn.A = mat_from(dyn.at("A"), "A");
  hc.dyn.B = mat_from(dyn.at("B"), "B");
  hc.dyn.a = vec_from(dyn.at("a"), "a");
  hc.tri = tri_from(j.at("triangulation"));
  for (const auto& [name, m] : j.at("modes").items()) {
    ModeDesign mode;
    mode.target = target_from(m.at("target"));
    mode.discontinuity_vertices = m.value("discontinuity_vertices", std::vector<int>{});
    for (const auto& per_simplex : m.at("roles")) {
      std::vector<FacetRole> facets;
      for (const auto& r : per_simplex) facets.push_back(role_from(r.get<std::string>()));
      mode.roles.push_back(std::move(facets));
    }
    if (mode.roles.size() != hc.tri.simplices.size()) {
      throw std::invalid_argument("mode '" + name + "' roles do not match the simplex count");
    }
    for (const auto& c : m.at("controllers")) {
      SimplexController sc;
      sc.simplex = c.at("simplex").get<int>();
      sc.K = mat_from(c.at("K"), "K");
      sc.g = vec_from(c.at("g"), "g");
      for (const auto& ui : c.at("u")) sc.vertex_controls.push_back(vec_from(ui, "u"));
      if (sc.simplex < 0 || sc.simplex >= hc.tri.size()) {
        throw std::invalid_argument("controller names simplex " + std::to_string(sc.simplex) +
                                    " outside the triangulation");
      }
      mode.ctrl.by_simplex[sc.simplex] = std::move(sc);
    }
    hc.modes[name] = std::move(mode);
  }
  return doc;
}

std::string scenario_json(const Scenario& sc) {
  ordered_json j;
  j["version"] = "1";
  j["x0"] = vec_j(sc.x0);
  j["mode0"] = sc.mode0;
  j["duration"] = sc.duration;
  j["dt"] = sc.dt;
  ordered_json events = ordered_json::array();
  for (const auto& ev : sc.events) {
    ordered_json e{{"t", ev.t}};
    switch (ev.kind) {
      case DisturbanceEvent::Kind::impulse:
        e["kind"] = "impulse";
        e["delta"] = vec_j(ev.delta);
        break;
      case DisturbanceEvent::Kind::teleport:
        e["kind"] = "teleport";
        e["state"] = vec_j(ev.delta);
        break;
      case DisturbanceEvent::Kind::hold:
        e["kind"] = "hold";
        e["duration"] = ev.duration;
        break;
    }
    events.push_back(std::move(e));
  }
  j["events"] = std::move(events);
  return j.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text) {
  json j = json::parse(text);
  Scenario sc;
  sc.x0 = vec_from(j.at("x0"), "x0");
  sc.mode0 = j.at("mode0").get<std::string>();
  sc.duration = j.at("duration").get<double>();
  sc.dt = j.at("dt").get<double>();
  for (const auto& e : j.value("events", json::array())) {
    DisturbanceEvent ev;
    ev.t = e.at("t").get<double>();
    std::string kind = e.at("kind").get<std::string>();
    if (kind == "impulse") {
      ev.kind = DisturbanceEvent::Kind::impulse;
      ev.delta = vec_from(e.at("delta"), "impulse delta");
    } else if (kind == "teleport") {
      ev.kind = DisturbanceEvent::Kind::teleport;
      ev.delta = vec_from(e.at("state"), "teleport state");
    } else if (kind == "hold") {
      ev.kind = DisturbanceEvent::Kind::hold;
      ev.duration = e.at("duration").get<double>();
    } else {
      throw std::invalid_argument("unknown disturbance kind '" + kind + "'");
    }
    sc.events.push_back(std::move(ev));
  }
  return sc;
}

std::string specs_json(const SpecSet& specs) {
  auto bands = [](const std::vector<BandSpec>& bs) {
    ordered_json a = ordered_json::array();
    for (const auto& b : bs) a.push_back({{"c", vec_j(b.c)}, {"bound", b.bound}});
    return a;
  };
  ordered_json j;
  j["version"] = "1";
  j["safety"] = bands(specs.safety);
  j["liveness"] = bands(specs.liveness);
  return j.dump(2) + "\n";
}

SpecSet parse_specs(const std::string& text) {
  json j = json::parse(text);
  auto bands = [](const json& a) {
    std::vector<BandSpec> out;
    for (const auto& b : a) {
      out.push_back({vec_from(b.at("c"), "band direction"), b.at("bound").get<double>()});
    }
    return out;
  };
  SpecSet specs;
  specs.safety = bands(j.value("safety", json::array()));
  specs.liveness = bands(j.value("liveness", json::array()));
  return specs;
}

std::string baseline_json(const BaselineProfile& bp, const std::vector<TargetSet>& windows) {
  ordered_json j;
  j["version"] = "1";
  j["profile"] = {{"v_cruise", bp.v_cruise}, {"x_peak", bp.x_peak}, {"t_blend", bp.t_blend},
                  {"kp", bp.kp},             {"kd", bp.kd},         {"clamp", bp.clamp}};
  ordered_json wins = ordered_json::array();
  for (const auto& w : windows) {
    wins.push_back({{"x_lo", w.x_lo}, {"x_hi", w.x_hi}, {"label", w.successor}});
  }
  j["windows"] = std::move(wins);
  return j.dump(2) + "\n";
}

std::pair<BaselineProfile, std::vector<TargetSet>> parse_baseline(const std::string& text) {
  json j = json::parse(text);
  const json& p = j.at("profile");
  BaselineProfile bp;
  bp.v_cruise = p.at("v_cruise").get<double>();
  bp.x_peak = p.at("x_peak").get<double>();
  bp.t_blend = p.at("t_blend").get<double>();
  bp.kp = p.at("kp").get<double>();
  bp.kd = p.at("kd").get<double>();
  bp.clamp = p.at("clamp").get<double>();
  std::vector<TargetSet> windows;
  for (const auto& w : j.value("windows", json::array())) {
    windows.push_back({w.at("x_lo").get<double>(), w.at("x_hi").get<double>(),
                       w.value("label", "")});
  }
  return {bp, windows};
}

SpecSummary summarize(const RunResult& rr) {
  SpecSummary s;
  s.status = rr.status == RunStatus::completed ? "completed" : "lost";
  s.samples = static_cast<int>(rr.rows.size());
  if (!rr.rows.empty()) s.per_band.assign(rr.rows.front().flags.safety.size(), 0);
  for (const LogRow& row : rr.rows) {
    for (size_t k = 0; k < row.flags.safety.size() && k < s.per_band.size(); ++k) {
      if (!row.flags.safety[k]) ++s.per_band[k];
    }
    if (!row.flags.safe()) {
      ++s.unsafe_samples;
      if (s.first_unsafe_t < 0.0) s.first_unsafe_t = row.t;
    }
    if (!row.flags.live()) {
      ++s.dead_samples;
      if (s.first_dead_t < 0.0) s.first_dead_t = row.t;
    }
    s.max_abs_x = std::max(s.max_abs_x, std::abs(row.s(0)));
    s.max_abs_xdot = std::max(s.max_abs_xdot, std::abs(row.s(1)));
    if (row.u.size()) s.max_abs_u = std::max(s.max_abs_u, std::abs(row.u(0)));
  }
  s.crossings = rr.crossings;
  for (size_t k = 1; k < s.crossings.size(); ++k) {
    if ((s.crossings[k].x > 0.0) == (s.crossings[k - 1].x > 0.0)) s.sequence_ok = false;
  }
  return s;
}

std::string summary_json(const SpecSummary& s) {
  ordered_json j;
  j["version"] = "1";
  j["status"] = s.status;
  j["samples"] = s.samples;
  j["safety"] = {{"unsafe_samples", s.unsafe_samples},
                 {"per_band", s.per_band},
                 {"first_t", s.first_unsafe_t < 0.0 ? ordered_json(nullptr)
                                                    : ordered_json(s.first_unsafe_t)}};
  j["liveness"] = {{"dead_samples", s.dead_samples},
                   {"first_t", s.first_dead_t < 0.0 ? ordered_json(nullptr)
                                                    : ordered_json(s.first_dead_t)}};
  j["peaks"] = {{"abs_x", s.max_abs_x}, {"abs_xdot", s.max_abs_xdot}, {"abs_u", s.max_abs_u}};
  ordered_json crossings = ordered_json::array();
  for (const Crossing& c : s.crossings) {
    crossings.push_back({{"t", c.t}, {"x", c.x}, {"from", c.from}, {"to", c.to}});
  }
  j["crossings"] = std::move(crossings);
  j["sequence_ok"] = s.sequence_ok;
  return j.dump(2) + "\n";
}

SpecSummary parse_summary(const std::string& text) {
  json j = json::parse(text);
  SpecSummary s;
  s.status = j.at("status").get<std::string>();
  s.samples = j.at("samples").get<int>();
  const json& safety = j.at("safety");
  s.unsafe_samples = safety.at("unsafe_samples").get<int>();
  s.per_band = safety.at("per_band").get<std::vector<int>>();
  s.first_unsafe_t = safety.at("first_t").is_null() ? -1.0 : safety.at("first_t").get<double>();
  const json& live = j.at("liveness");
  s.dead_samples = live.at("dead_samples").get<int>();
  s.first_dead_t = live.at("first_t").is_null() ? -1.0 : live.at("first_t").get<double>();
  const json& peaks = j.at("peaks");
  s.max_abs_x = peaks.at("abs_x").get<double>();
  s.max_abs_xdot = peaks.at("abs_xdot").get<double>();
  s.max_abs_u = peaks.at("abs_u").get<double>();
  for (const auto& c : j.value("crossings", json::array())) {
    s.crossings.push_back({c.at("t").get<double>(), c.at("x").get<double>(),
                           c.at("from").get<std::string>(), c.at("to").get<std::string>()});
  }
  s.sequence_ok = j.at("sequence_ok").get<bool>();
  return s;
}

std::string manifest_json(const Manifest& m) {
  ordered_json j;
  j["version"] = m.version;
  j["command"] = m.command;
  j["timestamp"] = m.timestamp;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& text) {
  json j = json::parse(text);
  Manifest m;
  m.version = j.value("version", "1");
  m.command = j.value("command", "");
  m.timestamp = j.value("timestamp", "");
  if (j.contains("inputs")) {
    for (const auto& [k, v] : j.at("inputs").items()) m.inputs[k] = v.get<std::string>();
  }
  if (j.contains("outputs")) {
    for (const auto& [k, v] : j.at("outputs").items()) m.outputs[k] = v.get<std::string>();
  }
  return m;
}

}  // namespace rcp::io
