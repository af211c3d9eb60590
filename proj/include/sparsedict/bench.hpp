#pragma once

#include "sparsedict/config.hpp"
#include "sparsedict/metrics.hpp"
#include "sparsedict/trainer.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sparsedict {

struct TrainerRun {
  double wall_time_s = 0.0;
  double split_time_s = 0.0;
  double locals_wall_time_s = 0.0;
  double merge_wall_time_s = 0.0;
  double mse_db = 0.0;
  std::optional<double> atom_recovery_pct;
};

struct BenchReport {
  Json params;
  TrainerRun standard;
  TrainerRun split_merge;
  double speedup = 0.0;
  CostPrediction predicted;
};

inline TrainerRun summarize(const TrainResult& r, const std::optional<Dictionary>& truth) {
  TrainerRun run;
  run.wall_time_s = r.report.wall_time_s;
  run.split_time_s = r.report.split_time_s;
  run.locals_wall_time_s = r.report.locals_wall_time_s;
  run.merge_wall_time_s = r.report.merge_wall_time_s;
  run.mse_db = r.report.final_mse_db;
  if (truth) run.atom_recovery_pct = atom_recovery(*truth, r.dictionary);
  return run;
}

inline CostParams cost_params(Index N, Index m, const TrainConfig& split) {
  const auto& p = split.split_merge.value();
  return CostParams{static_cast<double>(N), static_cast<double>(m), static_cast<double>(split.K),
                    static_cast<double>(split.s), static_cast<double>(p.L), static_cast<double>(p.K1),
                    static_cast<double>(p.s1), static_cast<double>(p.s2)};
}

/// Runs the standard trainer, then split-and-merge, on the same data.
/// Trainers run one after the other so their timings do not overlap.
/// The split wall time includes data splitting.
inline BenchReport bench_compare(const TrainingSet& Y, const TrainConfig& cfg_standard, const TrainConfig& cfg_split,
                                 const std::optional<Dictionary>& truth = std::nullopt,
                                 const std::optional<TrainResult>& standard_cached = std::nullopt) {
  if (cfg_standard.split_merge || !cfg_split.split_merge)
    throw InvalidInput("bench: expected one standard and one split-merge config");
  if (cfg_standard.K != cfg_split.K || cfg_standard.s != cfg_split.s)
    throw InvalidInput("bench: both configs must target the same K and s");
  BenchReport rep;
  rep.params = Json{{"N", Y.cols()}, {"m", Y.rows()}, {"standard", to_json(cfg_standard)}, {"split_merge", to_json(cfg_split)}};
  const TrainResult std_run = standard_cached ? *standard_cached : train_standard(Y, cfg_standard);
  const TrainResult sm_run = train_split_merge(Y, cfg_split);
  rep.standard = summarize(std_run, truth);
  rep.split_merge = summarize(sm_run, truth);
  rep.speedup = rep.split_merge.wall_time_s > 0.0 ? rep.standard.wall_time_s / rep.split_merge.wall_time_s : 0.0;
  rep.predicted = predict_costs(cost_params(Y.cols(), Y.rows(), cfg_split));
  return rep;
}

inline Json to_json(const TrainerRun& r) {
  Json j{{"wall_time_s", r.wall_time_s},
         {"split_time_s", r.split_time_s},
         {"locals_wall_time_s", r.locals_wall_time_s},
         {"merge_wall_time_s", r.merge_wall_time_s},
         {"mse_db", r.mse_db}};
  j["atom_recovery_pct"] = r.atom_recovery_pct ? Json(*r.atom_recovery_pct) : Json(nullptr);
  return j;
}

inline TrainerRun trainer_run_from_json(const Json& j) {
  TrainerRun r;
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.split_time_s = j.at("split_time_s").get<double>();
  r.locals_wall_time_s = j.at("locals_wall_time_s").get<double>();
  r.merge_wall_time_s = j.at("merge_wall_time_s").get<double>();
  r.mse_db = j.at("mse_db").get<double>();
  if (!j.at("atom_recovery_pct").is_null()) r.atom_recovery_pct = j.at("atom_recovery_pct").get<double>();
  return r;
}

inline Json to_json(const BenchReport& r) {
  return Json{{"params", r.params},
              {"standard", to_json(r.standard)},
              {"split_merge", to_json(r.split_merge)},
              {"speedup", r.speedup},
              {"predicted", {{"T1", r.predicted.T1},
                             {"T2", r.predicted.T2},
                             {"T_total", r.predicted.T_total},
                             {"ratio", r.predicted.ratio()},
                             {"same_order", r.predicted.same_order}}}};
}

inline BenchReport bench_report_from_json(const Json& j) {
  BenchReport r;
  r.params = j.at("params");
  r.standard = trainer_run_from_json(j.at("standard"));
  r.split_merge = trainer_run_from_json(j.at("split_merge"));
  r.speedup = j.at("speedup").get<double>();
  const Json& p = j.at("predicted");
  r.predicted.T1 = p.at("T1").get<double>();
  r.predicted.T2 = p.at("T2").get<double>();
  r.predicted.T_total = p.at("T_total").get<double>();
  r.predicted.same_order = p.at("same_order").get<bool>();
  return r;
}

/// One row per L: measured times and speedup next to the predicted T_total / T1.
inline std::string sweep_csv(const std::vector<std::pair<Index, BenchReport>>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "L,standard_wall_time_s,split_merge_wall_time_s,measured_speedup,predicted_ratio,predicted_speedup,"
         "standard_mse_db,split_merge_mse_db\n";
  for (const auto& [L, r] : rows)
    out << L << ',' << r.standard.wall_time_s << ',' << r.split_merge.wall_time_s << ',' << r.speedup << ','
        << r.predicted.ratio() << ',' << 1.0 / r.predicted.ratio() << ',' << r.standard.mse_db << ','
        << r.split_merge.mse_db << '\n';
  return out.str();
}

} // namespace sparsedict
