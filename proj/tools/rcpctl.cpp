#include <CLI11.hpp>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "rcp/case_study.hpp"
#include "rcp/executor.hpp"
#include "rcp/io.hpp"

using namespace rcp;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string vertex_name(const Triangulation& tri, int v) {
  if (v >= 0 && v < static_cast<int>(tri.names.size())) return tri.names[v];
  return "#" + std::to_string(v);
}

void print_failure(const ModeSynthesisFailure& f, const Triangulation& tri) {
  std::cerr << "synthesis failed: " << f.reason << "\n";
  if (f.simplex >= 0) {
    std::cerr << "  simplex " << f.simplex;
    if (f.vertex >= 0) std::cerr << ", vertex " << vertex_name(tri, f.vertex);
    std::cerr << "\n";
  }
  for (const std::string& line : f.detail) std::cerr << "  " << line << "\n";
}

void print_summary(const io::SpecSummary& s) {
  std::cout << "status " << s.status << ", " << s.samples << " samples\n"
            << "unsafe samples " << s.unsafe_samples << ", dead samples " << s.dead_samples
            << "\n"
            << "peaks |x| " << s.max_abs_x << ", |xdot| " << s.max_abs_xdot << ", |u| "
            << s.max_abs_u << "\n"
            << "crossings " << s.crossings.size()
            << (s.sequence_ok ? " (sides alternate)" : " (OUT OF ORDER)") << "\n";
}

void write_run(const fs::path& dir, const std::string& prefix, const RunResult& rr,
               const io::SpecSummary& sum) {
  io::write_file(dir / (prefix + "trajectory.csv"), io::trajectory_csv(rr.rows));
  io::write_file(dir / (prefix + "events.csv"), io::events_csv(rr.events));
  io::write_file(dir / (prefix + "phase.csv"), io::phase_csv(rr.rows));
  io::write_file(dir / (prefix + "position.csv"), io::position_csv(rr.rows));
  io::write_file(dir / (prefix + "summary.json"), io::summary_json(sum));
}

int cmd_synthesize(const std::string& design_path, const std::string& dynamics_path,
                   const std::string& out, const double* margin, const double* bounds) {
  std::string design_text = io::read_file(design_path);
  std::string dynamics_text = io::read_file(dynamics_path);
  io::DesignDoc design = io::parse_design(design_text);
  io::DynamicsDoc dd = io::parse_dynamics(dynamics_text);
  if (margin) dd.margin = *margin;
  if (bounds) {
    dd.u_lo = Vec::Constant(dd.dyn.nu(), -*bounds);
    dd.u_hi = Vec::Constant(dd.dyn.nu(), *bounds);
  }

  auto result = synthesize_mode(design.tri, dd.dyn, design.roles, dd.u_lo, dd.u_hi,
                                design.cont, dd.margin);
  if (std::holds_alternative<ModeSynthesisFailure>(result)) {
    print_failure(std::get<ModeSynthesisFailure>(result), design.tri);
    return 1;
  }

  ModeDesign primary;
  primary.ctrl = std::get<ModeController>(std::move(result));
  primary.roles = design.roles;
  primary.target = design.target;
  primary.discontinuity_vertices = design.cont.discontinuity_vertices;

  HybridController hc;
  hc.tri = design.tri;
  hc.dyn = dd.dyn;
  hc.u_lo = dd.u_lo;
  hc.u_hi = dd.u_hi;
  hc.margin = dd.margin;
  if (!design.reflected_name.empty()) {
    hc.modes[design.reflected_name] = reflect_mode(design.tri, primary, design.mode_name);
  }
  hc.modes[design.mode_name] = std::move(primary);

  std::map<std::string, std::string> prov{{"design", io::sha256_bytes(design_text)},
                                          {"dynamics", io::sha256_bytes(dynamics_text)}};
  io::write_file(out, io::bundle_json(hc, prov));
  std::cout << "wrote " << out << " (" << hc.modes.size() << " modes, " << hc.tri.size()
            << " simplices)\n";
  return 0;
}

int cmd_verify(const std::string& bundle_path) {
  io::BundleDoc doc = io::parse_bundle(io::read_file(bundle_path));
  const HybridController& hc = doc.hc;
  bool all_ok = true;
  for (const auto& [name, mode] : hc.modes) {
    ModeVerifyReport rep = verify_mode(hc.tri, hc.dyn, mode, hc.u_lo, hc.u_hi);
    ReachabilityReport reach = reachability_check(hc.tri, mode.roles, mode.target);
    std::cout << "mode " << name << "\n";
    for (int sid = 0; sid < hc.tri.size(); ++sid) {
      std::cout << "  simplex " << std::setw(2) << sid << " [";
      const auto& labels = hc.tri.simplices[sid];
      for (size_t i = 0; i < labels.size(); ++i) {
        std::cout << (i ? " " : "") << vertex_name(hc.tri, labels[i]);
      }
      auto it = rep.simplex_issues.find(sid);
      if (it == rep.simplex_issues.end() || it->second.empty()) {
        std::cout << "]  PASS\n";
      } else {
        std::cout << "]  FAIL\n";
        for (const std::string& issue : it->second) std::cout << "      " << issue << "\n";
      }
    }
    if (rep.continuity_issues.empty()) {
      std::cout << "  continuity PASS\n";
    } else {
      std::cout << "  continuity FAIL\n";
      for (const std::string& issue : rep.continuity_issues) {
        std::cout << "      " << issue << "\n";
      }
    }
    if (reach.ok) {
      std::cout << "  reachability PASS\n";
    } else {
      std::cout << "  reachability FAIL, no exit path from:";
      for (int sid : reach.unreachable) std::cout << " " << sid;
      std::cout << "\n";
    }
    all_ok = all_ok && rep.ok && reach.ok;
  }
  std::cout << "verify: " << (all_ok ? "PASS" : "FAIL") << "\n";
  return all_ok ? 0 : 1;
}

int cmd_simulate(const std::string& bundle_path, const std::string& scenario_path,
                 const std::string& out_dir, const double* dt, const std::string& specs_path) {
  io::BundleDoc doc = io::parse_bundle(io::read_file(bundle_path));
  Scenario sc = io::parse_scenario(io::read_file(scenario_path));
  if (dt) sc.dt = *dt;
  SpecSet specs;
  if (!specs_path.empty()) specs = io::parse_specs(io::read_file(specs_path));

  RunResult rr = run_scenario(doc.hc, sc, specs);
  io::SpecSummary sum = io::summarize(rr);
  write_run(out_dir, "", rr, sum);
  print_summary(sum);
  std::cout << "wrote trajectory.csv events.csv phase.csv position.csv summary.json to "
            << out_dir << "\n";
  return rr.status == RunStatus::completed ? 0 : 1;
}

int cmd_compare(const std::string& bundle_path, const std::string& scenario_path,
                const std::string& baseline_path, const std::string& out_dir, const double* dt,
                const std::string& specs_path) {
  io::BundleDoc doc = io::parse_bundle(io::read_file(bundle_path));
  Scenario sc = io::parse_scenario(io::read_file(scenario_path));
  if (dt) sc.dt = *dt;
  SpecSet specs;
  if (!specs_path.empty()) specs = io::parse_specs(io::read_file(specs_path));
  auto [profile, windows] = io::parse_baseline(io::read_file(baseline_path));

  RunResult ours = run_scenario(doc.hc, sc, specs);
  RunResult ref = run_baseline(doc.hc.dyn, tracking_controller(profile), sc, specs, windows,
                               &doc.hc.tri);
  io::SpecSummary ours_sum = io::summarize(ours);
  io::SpecSummary ref_sum = io::summarize(ref);
  write_run(out_dir, "controller_", ours, ours_sum);
  write_run(out_dir, "baseline_", ref, ref_sum);

  auto row = [](const std::string& label, auto a, auto b) {
    std::cout << "  " << std::left << std::setw(16) << label << std::setw(12) << a << b
              << "\n";
  };
  std::cout << "  " << std::left << std::setw(16) << "" << std::setw(12) << "controller"
            << "baseline\n";
  row("status", ours_sum.status, ref_sum.status);
  row("unsafe samples", ours_sum.unsafe_samples, ref_sum.unsafe_samples);
  row("dead samples", ours_sum.dead_samples, ref_sum.dead_samples);
  row("max |x|", ours_sum.max_abs_x, ref_sum.max_abs_x);
  row("max |xdot|", ours_sum.max_abs_xdot, ref_sum.max_abs_xdot);
  row("max |u|", ours_sum.max_abs_u, ref_sum.max_abs_u);
  row("crossings", ours_sum.crossings.size(), ref_sum.crossings.size());
  std::cout << "wrote controller_* and baseline_* files to " << out_dir << "\n";
  bool completed = ours.status == RunStatus::completed && ref.status == RunStatus::completed;
  return completed ? 0 : 1;
}

int cmd_casestudy(const std::string& out_dir, double bounds, double margin, unsigned seed) {
  ManeuverParams p;
  CaseStudy cs = build_case_study(p, bounds, margin);
  ValidationReport vr = validate_triangulation(cs.tri, safe_region(p), 10000, seed);
  if (!vr.valid) {
    std::cerr << "triangulation invalid:\n";
    for (const std::string& v : vr.violations) std::cerr << "  " << v << "\n";
    return 1;
  }
  std::cout << "triangulation: " << cs.tri.vertices.size() << " vertices, " << cs.tri.size()
            << " simplices, coverage checked on " << vr.samples << " samples\n";

  auto result = synthesize_maneuver(cs);
  if (std::holds_alternative<ModeSynthesisFailure>(result)) {
    print_failure(std::get<ModeSynthesisFailure>(result), cs.tri);
    return 1;
  }
  const HybridController& hc = std::get<HybridController>(result);
  for (const auto& [name, mode] : hc.modes) {
    ModeVerifyReport rep = verify_mode(hc.tri, hc.dyn, mode, hc.u_lo, hc.u_hi);
    ReachabilityReport reach = reachability_check(hc.tri, mode.roles, mode.target);
    if (!rep.ok || !reach.ok) {
      std::cerr << "mode " << name << " failed post-synthesis checks\n";
      return 1;
    }
    std::cout << "mode " << name << ": synthesized, verified, target reachable\n";
  }

  io::DesignDoc design;
  design.mode_name = "L2R";
  design.reflected_name = "R2L";
  design.tri = cs.tri;
  design.region = safe_region(p);
  design.roles = cs.roles;
  design.cont = cs.cont;
  design.target = cs.target;

  io::DynamicsDoc dd;
  dd.dyn = cs.dyn;
  dd.u_lo = cs.u_lo;
  dd.u_hi = cs.u_hi;
  dd.margin = cs.margin;

  std::string design_text = io::design_json(design);
  std::string dynamics_text = io::dynamics_json(dd);
  std::map<std::string, std::string> prov{{"design", io::sha256_bytes(design_text)},
                                          {"dynamics", io::sha256_bytes(dynamics_text)}};

  Scenario nominal;
  nominal.x0 = Vec(2);
  nominal.x0 << -2.0, 0.0;
  nominal.mode0 = "L2R";
  nominal.duration = 30.0;
  nominal.dt = 0.01;

  Scenario impulse = nominal;
  DisturbanceEvent kick;
  kick.kind = DisturbanceEvent::Kind::impulse;
  kick.t = 0.45;
  kick.delta = Vec(2);
  kick.delta << 0.0, 1.0;
  impulse.events.push_back(kick);

  Scenario teleport = nominal;
  DisturbanceEvent jump;
  jump.kind = DisturbanceEvent::Kind::teleport;
  jump.t = 5.0;
  jump.delta = Vec(2);
  jump.delta << 0.0, 0.1;
  teleport.events.push_back(jump);

  BaselineProfile profile;
  std::vector<TargetSet> windows{{p.d_thres, p.d_max, "right"}, {-p.d_max, -p.d_thres, "left"}};

  // Start both racers on the cruise so the reference tracker has a fair lap in
  // progress when the actuators freeze.
  Scenario hold_compare = nominal;
  hold_compare.x0 << -profile.cruise_half(), profile.v_cruise;
  DisturbanceEvent freeze;
  freeze.kind = DisturbanceEvent::Kind::hold;
  freeze.t = 6.0;
  freeze.duration = 4.5;
  hold_compare.events.push_back(freeze);

  fs::path dir = out_dir;
  std::map<std::string, std::string> files;
  files["design.json"] = design_text;
  files["dynamics.json"] = dynamics_text;
  files["specs.json"] = io::specs_json(cs.specs);
  files["bundle.json"] = io::bundle_json(hc, prov);
  files["nominal.json"] = io::scenario_json(nominal);
  files["impulse.json"] = io::scenario_json(impulse);
  files["teleport.json"] = io::scenario_json(teleport);
  files["hold_compare.json"] = io::scenario_json(hold_compare);
  files["baseline.json"] = io::baseline_json(profile, windows);

  io::Manifest manifest;
  manifest.command = "rcpctl casestudy";
  manifest.timestamp = utc_now();
  for (const auto& [name, text] : files) {
    io::write_file(dir / name, text);
    manifest.outputs[name] = io::sha256_bytes(text);
  }
  io::write_file(dir / "manifest.json", io::manifest_json(manifest));
  std::cout << "wrote " << files.size() << " documents and manifest.json to " << dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piecewise affine reach controller toolkit"};
  app.require_subcommand(1);

  auto* syn = app.add_subcommand(
      "synthesize", "solve the vertex control problems and emit a controller bundle");
  std::string syn_design, syn_dynamics, syn_out = "bundle.json";
  double syn_margin = 0.0, syn_bounds = 0.0;
  syn->add_option("design", syn_design, "design document")->required();
  syn->add_option("dynamics", syn_dynamics, "dynamics document")->required();
  syn->add_option("--out", syn_out, "output bundle path");
  auto* syn_margin_opt = syn->add_option("--margin", syn_margin, "override invariance margin");
  auto* syn_bounds_opt =
      syn->add_option("--bounds", syn_bounds, "override control bounds to [-b, b]");

  auto* ver = app.add_subcommand("verify", "re-check every stored controller independently");
  std::string ver_bundle;
  ver->add_option("bundle", ver_bundle, "controller bundle")->required();

  auto* sim = app.add_subcommand("simulate", "run a scenario and write logs plus a summary");
  std::string sim_bundle, sim_scenario, sim_out = ".", sim_specs;
  double sim_dt = 0.0;
  sim->add_option("bundle", sim_bundle, "controller bundle")->required();
  sim->add_option("scenario", sim_scenario, "scenario document")->required();
  sim->add_option("--out", sim_out, "output directory");
  auto* sim_dt_opt = sim->add_option("--dt", sim_dt, "override sampling period");
  sim->add_option("--specs", sim_specs, "spec band document to monitor");

  auto* cmp = app.add_subcommand("compare",
                                 "run a scenario under both the synthesized controller and a "
                                 "reference tracker");
  std::string cmp_bundle, cmp_scenario, cmp_baseline, cmp_out = ".", cmp_specs;
  double cmp_dt = 0.0;
  cmp->add_option("bundle", cmp_bundle, "controller bundle")->required();
  cmp->add_option("scenario", cmp_scenario, "scenario document")->required();
  cmp->add_option("baseline", cmp_baseline, "reference tracker document")->required();
  cmp->add_option("--out", cmp_out, "output directory");
  auto* cmp_dt_opt = cmp->add_option("--dt", cmp_dt, "override sampling period");
  cmp->add_option("--specs", cmp_specs, "spec band document to monitor");

  auto* cst = app.add_subcommand("casestudy",
                                 "generate the side-to-side maneuver dataset and bundle");
  std::string cst_out = "data/sidetoside";
  double cst_bounds = 3.2, cst_margin = 1e-6;
  unsigned cst_seed = 1;
  cst->add_option("--out", cst_out, "output directory");
  cst->add_option("--bounds", cst_bounds, "control bounds [-b, b]");
  cst->add_option("--margin", cst_margin, "invariance margin");
  cst->add_option("--seed", cst_seed, "coverage sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*syn) {
      return cmd_synthesize(syn_design, syn_dynamics, syn_out,
                            syn_margin_opt->count() ? &syn_margin : nullptr,
                            syn_bounds_opt->count() ? &syn_bounds : nullptr);
    }
    if (*ver) return cmd_verify(ver_bundle);
    if (*sim) {
      return cmd_simulate(sim_bundle, sim_scenario, sim_out,
                          sim_dt_opt->count() ? &sim_dt : nullptr, sim_specs);
    }
    if (*cmp) {
      return cmd_compare(cmp_bundle, cmp_scenario, cmp_baseline, cmp_out,
                         cmp_dt_opt->count() ? &cmp_dt : nullptr, cmp_specs);
    }
    if (*cst) return cmd_casestudy(cst_out, cst_bounds, cst_margin, cst_seed);
  } catch (const std::exception& e) {
    std::cerr << "rcpctl: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
