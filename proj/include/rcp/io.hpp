#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rcp/case_study.hpp"
#include "rcp/executor.hpp"
#include "rcp/synthesis.hpp"

namespace rcp::io {

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

std::string sha256_bytes(const std::string& bytes);  // lowercase hex digest
std::string sha256_file(const std::filesystem::path& p);

// Log tables as CSV; every floating-point field uses the shortest decimal
// that round-trips, so identical runs serialize to identical bytes.
// Columns: t,x,xdot,u,theta_d,simplex,mode,S1,S2,S3,L1,L2,L3 (flags 1 = holds).
std::string trajectory_csv(const std::vector<LogRow>& rows);
// Columns: t,kind,detail.
std::string events_csv(const std::vector<EventRow>& events);
// Plot polylines: x,xdot and t,x.
std::string phase_csv(const std::vector<LogRow>& rows);
std::string position_csv(const std::vector<LogRow>& rows);

// Control plan: triangulation, flow roles, continuity declarations, and the
// window it drives toward, plus the region it must cover.
struct DesignDoc {
  Triangulation tri;
  std::vector<LinIneq> region;
  RoleTable roles;
  ContinuitySpec cont;
  TargetSet target;
  std::string mode_name;
  std::string reflected_name;  // empty: no mirrored partner mode
};

std::string design_json(const DesignDoc& doc);
DesignDoc parse_design(const std::string& text);

struct DynamicsDoc {
  AffineDynamics dyn;
  Vec u_lo, u_hi;
  double margin = 1e-6;
};

std::string dynamics_json(const DynamicsDoc& doc);
DynamicsDoc parse_dynamics(const std::string& text);

// Synthesized controller with the digests of the files it was built from.
struct BundleDoc {
  HybridController hc;
  std::map<std::string, std::string> provenance;  // input name -> sha256
  std::string version = "1";
};

std::string bundle_json(const HybridController& hc,
                        const std::map<std::string, std::string>& provenance);
BundleDoc parse_bundle(const std::string& text);

std::string scenario_json(const Scenario& sc);
Scenario parse_scenario(const std::string& text);

std::string specs_json(const SpecSet& specs);
SpecSet parse_specs(const std::string& text);

std::string baseline_json(const BaselineProfile& bp, const std::vector<TargetSet>& windows);
std::pair<BaselineProfile, std::vector<TargetSet>> parse_baseline(const std::string& text);

// Per-run spec accounting; first_* are -1 when the run never tripped them.
struct SpecSummary {
  std::string status;
  int samples = 0;
  std::vector<int> per_band;  // unsafe samples per safety band
  int unsafe_samples = 0;
  int dead_samples = 0;
  double first_unsafe_t = -1.0;
  double first_dead_t = -1.0;
  double max_abs_x = 0.0;
  double max_abs_xdot = 0.0;
  double max_abs_u = 0.0;
  std::vector<Crossing> crossings;
  bool sequence_ok = true;  // crossings alternate sides
};

SpecSummary summarize(const RunResult& rr);
std::string summary_json(const SpecSummary& s);
SpecSummary parse_summary(const std::string& text);

struct Manifest {
  std::string version = "1";
  std::string command;
  std::string timestamp;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;
};

std::string manifest_json(const Manifest& m);
Manifest parse_manifest(const std::string& text);

}  // namespace rcp::io
