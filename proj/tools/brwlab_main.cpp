// brwlab: Monte Carlo laboratory for branching random walks in the boundary
// case. Subcommands dispatch the experiment layer; every run is fully
// determined by (config file, seed) and outputs are written atomically.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "brwlab/brw_engine.hpp"
#include "brwlab/config.hpp"
#include "brwlab/experiments.hpp"
#include "brwlab/io.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/rw_kit.hpp"
#include "brwlab/spine_engine.hpp"

namespace {

using brw::RunConfig;
using json = nlohmann::ordered_json;

json estimate_json(const brw::EstimateWithCI& e) {
  return json{{"value", e.value},
              {"stderr", e.stderr_},
              {"count", e.count},
              {"estimator_kind", e.estimator_kind}};
}

json header_json(const char* command, const RunConfig& cfg,
                 const brw::PointProcessModel& model) {
  return json{{"schema_version", brw::kSchemaVersion},
              {"command", command},
              {"model", model.name},
              {"model_hash", brw::format_hash(model.hash())},
              {"seed", cfg.seed}};
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
  brw::atomic_write(std::filesystem::path(cfg.out_dir) / name, j.dump(2) + "\n");
}

void write_csv(const RunConfig& cfg, const std::string& name,
               const std::vector<brw::CsvRow>& rows, const std::string& zx = "z") {
  brw::atomic_write(std::filesystem::path(cfg.out_dir) / name, brw::csv_table(rows, zx));
}

brw::CsvRow row_of(const RunConfig& cfg, const brw::PointProcessModel& model, double zx,
                   int n, const brw::EstimateWithCI& e, const std::string& kind) {
  return brw::CsvRow{zx, n, e.value, e.stderr_, e.count, kind, model.hash(), cfg.seed};
}

void progress(const char* phase) { std::fprintf(stderr, "brwlab: %s\n", phase); }

// Shared ladder + renewal setup; reuses an on-disk cache keyed by
// (model hash, seed, budget).
struct RenewalSetup {
  brw::WalkModel walk;
  brw::LadderTable ladder;
  brw::RenewalFunction plus, minus;
};

RenewalSetup build_renewal(const RunConfig& cfg, const brw::PointProcessModel& model) {
  RenewalSetup setup;
  setup.walk = brw::derive_walk(model);
  const auto cache = std::filesystem::path(cfg.out_dir) /
                     brw::ladder_cache_name(model.hash(), cfg.seed, cfg.ladder_budget);
  if (std::filesystem::exists(cache)) {
    setup.ladder = brw::load_ladder_cache(cache);
    setup.ladder.seed = cfg.seed;
    setup.ladder.model_hash = model.hash();
  } else {
    setup.ladder = brw::build_ladder_table(setup.walk, cfg.ladder_budget, cfg.seed,
                                           cfg.ladder_step_cap, cfg.make_parallel());
    std::filesystem::create_directories(cfg.out_dir);
    brw::save_ladder_cache(cache, setup.ladder);
  }
  setup.plus = brw::estimate_renewal(setup.ladder, false, 25.0, 0.05, cfg.renewal_reps,
                                     cfg.seed, cfg.make_parallel());
  setup.minus = brw::estimate_renewal(setup.ladder, true, 25.0, 0.05, cfg.renewal_reps,
                                      cfg.seed, cfg.make_parallel());
  return setup;
}

int cmd_validate_model(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  const auto report =
      brw::check_boundary_conditions(model, cfg.walk_budget, cfg.seed, cfg.make_parallel());
  json j = header_json("validate-model", cfg, model);
  j["budget"] = report.budget;
  j["estimates"] = json{{"mean_children", estimate_json(report.mean_children)},
                        {"mean_weight", estimate_json(report.mean_weight)},
                        {"mean_vweight", estimate_json(report.mean_vweight)},
                        {"sigma_sq", estimate_json(report.sigma_sq)},
                        {"x_log2", estimate_json(report.x_log2)},
                        {"xt_log", estimate_json(report.xt_log)}};
  j["verdicts"] = json{{"supercritical", report.supercritical_pass},
                       {"boundary", report.boundary_pass},
                       {"derivative", report.derivative_pass},
                       {"sigma", report.sigma_pass},
                       {"all_pass", report.all_pass}};
  write_json(cfg, "model_report.json", j);
  return report.all_pass ? 0 : 1;
}

int cmd_rw_constants(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  RenewalSetup setup = build_renewal(cfg, model);
  const int n_grid[] = {10, 40, 160, 640};
  const auto constants = brw::estimate_constants(setup.walk, n_grid, cfg.walk_budget,
                                                 cfg.seed, &setup.ladder,
                                                 cfg.make_parallel());
  std::vector<brw::CsvRow> rows;
  for (const auto& r : constants.rows) {
    rows.push_back(row_of(cfg, model, r.n, r.n, r.stay_positive, "stay_positive"));
    rows.push_back(row_of(cfg, model, r.n, r.n, r.stay_negative, "stay_negative"));
  }
  write_csv(cfg, "constants.csv", rows, "n");
  std::vector<brw::CsvRow> renewal_rows;
  for (size_t i = 0; i < setup.plus.grid.size(); i += 10) {
    renewal_rows.push_back(brw::CsvRow{setup.plus.grid[i], 0, setup.plus.values[i],
                                       setup.plus.stderrs[i], setup.plus.replications,
                                       "renewal_R", model.hash(), cfg.seed});
    renewal_rows.push_back(brw::CsvRow{setup.minus.grid[i], 0, setup.minus.values[i],
                                       setup.minus.stderrs[i], setup.minus.replications,
                                       "renewal_R_minus", model.hash(), cfg.seed});
  }
  write_csv(cfg, "renewal.csv", renewal_rows, "x");

  json j = header_json("rw-constants", cfg, model);
  j["c0_hat"] = estimate_json(setup.plus.c0_hat);
  j["c0_slope"] = estimate_json(setup.plus.c0_slope);
  j["c_plus_hat"] = estimate_json(constants.c_plus_hat);
  j["c_minus_hat"] = estimate_json(constants.c_minus_hat);
  j["c_symmetric_exact"] = constants.c_symmetric_exact;
  j["mean_ladder_height"] = setup.ladder.mean_height(false);
  j["ladder_cap_events"] =
      json{{"plus", setup.ladder.cap_events_plus}, {"minus", setup.ladder.cap_events_minus}};
  json sa = json::array();
  for (const auto& r : constants.rows)
    sa.push_back(json{{"n", r.n},
                      {"estimate", r.stay_positive.value},
                      {"exact", r.sparre_andersen_exact}});
  j["sparre_andersen"] = sa;

  // Scaling checks: the Kozlov n^{-1/2} bound and the window asymptotic.
  progress("ballot and window scaling checks");
  json checks = json::array();
  for (int n : {100, 400}) {
    brw::BallotParams p;
    p.n = n;
    const auto ballot = brw::ballot_check(setup.walk, brw::BallotScenario::Kozlov, p,
                                          cfg.walk_budget, cfg.seed, cfg.make_parallel());
    checks.push_back(json{{"label", ballot.label},
                          {"n", n},
                          {"probability", estimate_json(ballot.probability)},
                          {"scaled", ballot.scaled},
                          {"scaled_se", ballot.scaled_se}});
  }
  {
    const auto l21 = brw::lemma21_check(setup.walk, 2.0, 400, 0.0, 0.5, cfg.walk_budget,
                                        setup.minus, cfg.seed, 0, 0, cfg.make_parallel());
    checks.push_back(json{{"label", "window_asymptotic_n400"},
                          {"lhs_scaled", l21.lhs_scaled},
                          {"lhs_scaled_se", l21.lhs_scaled_se},
                          {"rhs", l21.rhs},
                          {"rhs_se", l21.rhs_se},
                          {"constant", l21.constant}});
  }
  j["checks"] = checks;
  write_json(cfg, "constants.json", j);
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  const auto walk_kind = brw::derive_walk(model).kind;
  const bool degenerate = walk_kind == brw::WalkModel::Kind::Zero;
  RenewalSetup setup;
  if (!degenerate) setup = build_renewal(cfg, model);

  struct Acc {
    brw::MeanAcc w, d, dbeta, pruned;
    brw::HitAcc survived;
    uint64_t overflow = 0;
    void merge(const Acc& o) {
      w.merge(o.w);
      d.merge(o.d);
      dbeta.merge(o.dbeta);
      pruned.merge(o.pruned);
      survived.merge(o.survived);
      overflow += o.overflow;
    }
  };
  const auto policy = cfg.make_policy();
  const uint64_t scope = brw::scoped_seed(cfg.seed, "cli-simulate");
  const brw::RenewalFunction* rf = degenerate ? nullptr : &setup.plus;
  Acc acc = brw::run_replications<Acc>(
      cfg.replications, cfg.make_parallel(), [&](uint64_t rep, Acc& a) {
        brw::RngStream rng(scope, rep);
        const auto st =
            brw::run_tree(model, cfg.n, cfg.beta, policy, rng, rf, cfg.population_cap());
        if (st.overflow) {
          ++a.overflow;
          return;
        }
        a.w.add(st.W_n);
        a.d.add(st.D_n);
        if (rf) a.dbeta.add(st.D_n_beta);
        a.pruned.add(st.pruned_mass_bound);
        a.survived.add(st.survived);
      });

  std::vector<brw::CsvRow> rows;
  rows.push_back(row_of(cfg, model, 0.0, cfg.n, acc.w.estimate(cfg.seed, "W_n"), "W_n"));
  rows.push_back(row_of(cfg, model, 0.0, cfg.n, acc.d.estimate(cfg.seed, "D_n"), "D_n"));
  if (rf)
    rows.push_back(
        row_of(cfg, model, cfg.beta, cfg.n, acc.dbeta.estimate(cfg.seed, "D_n_beta"),
               "D_n_beta"));
  write_csv(cfg, "simulate.csv", rows, "beta");

  json j = header_json("simulate", cfg, model);
  j["n"] = cfg.n;
  j["beta"] = cfg.beta;
  j["replications"] = cfg.replications;
  j["W_n"] = estimate_json(acc.w.estimate(cfg.seed, "W_n"));
  j["D_n"] = estimate_json(acc.d.estimate(cfg.seed, "D_n"));
  if (rf) {
    j["D_n_beta"] = estimate_json(acc.dbeta.estimate(cfg.seed, "D_n_beta"));
    j["renewal_at_beta"] = setup.plus.eval(cfg.beta);
  }
  j["survived_fraction"] = acc.survived.p();
  j["mean_pruned_mass_bound"] = acc.pruned.mean();
  j["overflow_count"] = acc.overflow;
  write_json(cfg, "simulate.json", j);
  return acc.overflow == 0 ? 0 : 1;
}

int cmd_tail_kill(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  const auto grid = cfg.z_grid();
  progress("killed-tail spine campaign");
  const auto report =
      brw::exp_killed_tail(model, cfg.n, grid, cfg.replications, cfg.seed,
                           cfg.make_policy(), cfg.make_parallel(), cfg.population_cap());
  std::vector<brw::CsvRow> rows;
  for (const auto& r : report.rows) {
    rows.push_back(row_of(cfg, model, r.z, cfg.n, r.p_cum, "spine"));
    rows.push_back(row_of(cfg, model, r.z, cfg.n, r.p_window, "spine_window"));
  }
  write_csv(cfg, "tail_kill.csv", rows);
  json j = header_json("tail-kill", cfg, model);
  j["n"] = cfg.n;
  j["replications"] = cfg.replications;
  j["accepted"] = report.accepted;
  j["C1_hat"] = estimate_json(report.C1_hat);
  j["plateau_ratio"] = report.plateau_ratio;
  j["mean_pruned_weight"] = report.mean_pruned_weight;
  json zrows = json::array();
  for (const auto& r : report.rows)
    zrows.push_back(json{{"z", r.z},
                         {"ez_p", r.ez_p},
                         {"ez_p_se", r.ez_p_se},
                         {"ez_window", r.ez_window},
                         {"ez_window_se", r.ez_window_se}});
  j["rows"] = zrows;
  write_json(cfg, "tail_kill.json", j);
  return 0;
}

int cmd_tail_full(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  RenewalSetup setup = build_renewal(cfg, model);
  const auto grid = cfg.z_grid();
  progress("killed-tail spine campaign");
  const auto killed =
      brw::exp_killed_tail(model, cfg.n, grid, cfg.replications, cfg.seed,
                           cfg.make_policy(), cfg.make_parallel(), cfg.population_cap());
  progress("direct full-tail and decomposition campaign");
  const auto report = brw::exp_full_tail(
      model, cfg.n, grid, cfg.replications, cfg.seed, killed.C1_hat.value,
      setup.plus.c0_hat.value, cfg.A, setup.plus, cfg.make_policy(), cfg.make_parallel(),
      std::max<uint64_t>(cfg.replications / 2, 1));
  std::vector<brw::CsvRow> rows;
  for (const auto& r : report.rows) {
    rows.push_back(row_of(cfg, model, r.z, cfg.n, r.p_direct, "direct_full"));
    rows.push_back(row_of(cfg, model, r.z, cfg.n, r.p_kill_direct, "direct_kill"));
    rows.push_back(row_of(cfg, model, r.z, cfg.n, r.decomposition, "decomposition"));
  }
  write_csv(cfg, "tail_full.csv", rows);
  json j = header_json("tail-full", cfg, model);
  j["n"] = cfg.n;
  j["A"] = cfg.A;
  j["C1_hat"] = killed.C1_hat.value;
  j["c0_hat"] = setup.plus.c0_hat.value;
  j["c1_c0"] = report.c1_c0;
  json zrows = json::array();
  for (const auto& r : report.rows)
    zrows.push_back(json{{"z", r.z},
                         {"feasible", r.feasible},
                         {"ezz_p", r.ezz_p},
                         {"ezz_p_se", r.ezz_p_se},
                         {"ratio_to_c1c0", r.ratio_to_c1c0},
                         {"ratio_se", r.ratio_se},
                         {"decomposition_ratio", r.decomposition.value},
                         {"decomposition_se", r.decomposition.stderr_}});
  j["rows"] = zrows;
  write_json(cfg, "tail_full.json", j);
  return 0;
}

int cmd_limit_law(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  const auto grid = cfg.x_grid();
  progress("limit-law tree campaign");
  const auto [low, high] = brw::exp_limit_law_paired(model, cfg.n_low, cfg.n, grid,
                                                     cfg.replications, cfg.seed,
                                                     cfg.make_parallel(),
                                                     cfg.population_cap());
  std::vector<brw::CsvRow> rows;
  for (const auto* rep : {&low, &high}) {
    for (size_t i = 0; i < rep->x_grid.size(); ++i) {
      rows.push_back(brw::CsvRow{rep->x_grid[i], rep->n, rep->empirical_survival[i],
                                 rep->empirical_se[i], rep->replications, "survival",
                                 model.hash(), cfg.seed});
      rows.push_back(brw::CsvRow{rep->x_grid[i], rep->n, rep->mixture_prediction[i],
                                 rep->mixture_se[i], rep->replications, "mixture",
                                 model.hash(), cfg.seed});
    }
  }
  write_csv(cfg, "limit_law.csv", rows, "x");
  json j = header_json("limit-law", cfg, model);
  j["replications"] = cfg.replications;
  json per_n = json::array();
  for (const auto* rep : {&low, &high})
    per_n.push_back(json{{"n", rep->n},
                         {"C_hat", rep->C_hat},
                         {"sup_distance", rep->sup_distance},
                         {"dead_trees", rep->dead_trees},
                         {"flagged", rep->flagged}});
  j["reports"] = per_n;
  j["sup_distance_non_increasing"] = high.sup_distance <= low.sup_distance;
  write_json(cfg, "limit_law.json", j);
  return (low.flagged || high.flagged) ? 1 : 0;
}

int cmd_identity_suite(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  const auto suite = brw::exp_identity_suite(model, cfg.seed, {}, cfg.make_parallel());
  std::vector<brw::CsvRow> rows;
  for (const auto& c : suite.checks)
    rows.push_back(brw::CsvRow{0.0, 0, c.value, c.tolerance / 4.0, cfg.replications,
                               c.name, model.hash(), cfg.seed});
  write_csv(cfg, "identity_suite.csv", rows);
  json j = header_json("identity-suite", cfg, model);
  json checks = json::array();
  for (const auto& c : suite.checks)
    checks.push_back(json{{"name", c.name},
                          {"value", c.value},
                          {"target", c.target},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass},
                          {"detail", c.detail}});
  j["checks"] = checks;
  j["all_pass"] = suite.all_pass;
  write_json(cfg, "identity_suite.json", j);
  return suite.all_pass ? 0 : 1;
}

int cmd_decompose(const RunConfig& cfg) {
  const auto model = cfg.make_model();
  RenewalSetup setup = build_renewal(cfg, model);
  std::vector<brw::CsvRow> rows;
  json zrows = json::array();
  for (double z : cfg.z_grid()) {
    if (z < cfg.A) continue;
    const auto rep = brw::first_crossing_decomposition(
        model, cfg.n, z, cfg.A, cfg.replications, cfg.seed, setup.plus,
        cfg.make_policy(), cfg.make_parallel());
    rows.push_back(brw::CsvRow{z, cfg.n, rep.ratio, rep.ratio_se, rep.replications,
                               "decomposition", model.hash(), cfg.seed});
    zrows.push_back(json{{"z", z},
                         {"sum_B", estimate_json(rep.sum_B)},
                         {"sum_B_tame", estimate_json(rep.sum_B_tame)},
                         {"renewal_value", rep.renewal_value},
                         {"ratio", rep.ratio},
                         {"ratio_se", rep.ratio_se},
                         {"mean_members", rep.mean_members},
                         {"mask_overflows", rep.mask_overflows}});
  }
  write_csv(cfg, "decompose.csv", rows);
  json j = header_json("decompose", cfg, model);
  j["n"] = cfg.n;
  j["A"] = cfg.A;
  j["rows"] = zrows;
  write_json(cfg, "decompose.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for boundary-case branching random walks"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed_override = 0;
  bool have_seed = false;
  uint64_t reps_override = 0;
  unsigned workers_override = 0;
  bool have_workers = false;
  std::string out_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "path to the run config file")->required();
    sub->add_option("--seed", seed_override, "override [execution] seed")
        ->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--replications", reps_override, "override replication count");
    sub->add_option("--workers", workers_override, "override worker count")
        ->each([&](const std::string&) { have_workers = true; });
    sub->add_option("--out", out_override, "override output directory");
  };

  const char* names[] = {"validate-model", "rw-constants", "simulate", "tail-kill",
                         "tail-full",      "limit-law",    "identity-suite", "decompose"};
  for (const char* name : names) add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = brw::parse_config_file(config_path);
    if (have_seed) cfg.seed = seed_override;
    if (reps_override > 0) cfg.replications = reps_override;
    if (have_workers) cfg.workers = workers_override;
    if (!out_override.empty()) cfg.out_dir = out_override;

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "validate-model") return cmd_validate_model(cfg);
    if (sub == "rw-constants") return cmd_rw_constants(cfg);
    if (sub == "simulate") return cmd_simulate(cfg);
    if (sub == "tail-kill") return cmd_tail_kill(cfg);
    if (sub == "tail-full") return cmd_tail_full(cfg);
    if (sub == "limit-law") return cmd_limit_law(cfg);
    if (sub == "identity-suite") return cmd_identity_suite(cfg);
    if (sub == "decompose") return cmd_decompose(cfg);
    std::fprintf(stderr, "unknown subcommand\n");
    return 2;
  } catch (const brw::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
