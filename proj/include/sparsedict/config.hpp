#pragma once

// JSON forms of the run configuration and training report.
//
// TrainConfig:
//   {
//     "K": 60, "s": 6,                       required
//     "iterations": 100,                     default 100
//     "init": "first-columns" | "overcomplete-dct" | "explicit-matrix",
//     "init_dictionary": "start.sdict",      explicit-matrix only, relative
//                                            to the config file
//     "seed": 0,
//     "mode": "standard" | "split-merge",    default "standard"
//     "split_merge": { "L": 40, "K1": 50, "s1": 3, "s2": 2,
//                      "local_iterations": 100, "merge_iterations": 100 }
//   }
// Unknown keys are rejected.

#include "sparsedict/io.hpp"
#include "sparsedict/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

namespace sparsedict {

using Json = nlohmann::json;

struct ConfigError : InvalidInput {
  using InvalidInput::InvalidInput;
};

namespace config_detail {

inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!ok.count(item.key())) throw ConfigError(where + ": unknown field \"" + item.key() + "\"");
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + ": field \"" + key + "\" has the wrong type");
  }
}

template <class T>
T require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field \"" + key + "\"");
  return get_or<T>(j, key, T{}, where);
}

inline InitKind parse_init(const std::string& s) {
  if (s == "first-columns") return InitKind::FirstColumns;
  if (s == "overcomplete-dct") return InitKind::OvercompleteDct;
  if (s == "explicit-matrix") return InitKind::ExplicitMatrix;
  throw ConfigError("config: unknown init \"" + s + "\"");
}

} // namespace config_detail

/// Parses and validates. `base_dir` resolves relative file references.
inline TrainConfig train_config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  const std::string where = "train config";
  reject_unknown(j, {"K", "s", "iterations", "init", "init_dictionary", "seed", "mode", "split_merge"}, where);
  TrainConfig cfg;
  cfg.K = require<Index>(j, "K", where);
  cfg.s = require<Index>(j, "s", where);
  cfg.iterations = get_or<Index>(j, "iterations", 100, where);
  cfg.init = parse_init(get_or<std::string>(j, "init", "first-columns", where));
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  if (j.contains("init_dictionary")) {
    if (cfg.init != InitKind::ExplicitMatrix)
      throw ConfigError(where + ": init_dictionary requires init = explicit-matrix");
    std::filesystem::path p = get_or<std::string>(j, "init_dictionary", "", where);
    if (p.is_relative()) p = base_dir / p;
    cfg.init_dictionary = load_dictionary(p);
  }
  const auto mode = get_or<std::string>(j, "mode", "standard", where);
  if (mode == "split-merge") {
    if (!j.contains("split_merge")) throw ConfigError(where + ": split-merge mode needs \"split_merge\"");
    const Json& sm = j.at("split_merge");
    const std::string w2 = where + ".split_merge";
    reject_unknown(sm, {"L", "K1", "s1", "s2", "local_iterations", "merge_iterations"}, w2);
    SplitMergeParams p;
    p.L = require<Index>(sm, "L", w2);
    p.K1 = require<Index>(sm, "K1", w2);
    p.s1 = require<Index>(sm, "s1", w2);
    p.s2 = require<Index>(sm, "s2", w2);
    p.local_iterations = get_or<Index>(sm, "local_iterations", 0, w2);
    p.merge_iterations = get_or<Index>(sm, "merge_iterations", 0, w2);
    cfg.split_merge = p;
  } else if (mode == "standard") {
    if (j.contains("split_merge")) throw ConfigError(where + ": \"split_merge\" given in standard mode");
  } else {
    throw ConfigError(where + ": unknown mode \"" + mode + "\"");
  }
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  return train_config_from_json(read_json_file(path), path.parent_path());
}

/// The init dictionary itself is not serialized, only the init kind.
inline Json to_json(const TrainConfig& cfg) {
  Json j{{"K", cfg.K},
         {"s", cfg.s},
         {"iterations", cfg.iterations},
         {"init", to_string(cfg.init)},
         {"seed", cfg.seed},
         {"mode", cfg.split_merge ? "split-merge" : "standard"}};
  if (cfg.split_merge) {
    const auto& p = *cfg.split_merge;
    j["split_merge"] = {{"L", p.L},
                        {"K1", p.K1},
                        {"s1", p.s1},
                        {"s2", p.s2},
                        {"local_iterations", cfg.local_iterations()},
                        {"merge_iterations", cfg.merge_iterations()}};
  }
  return j;
}

inline Json to_json(const TrainReport& r) {
  return Json{{"final_mse_db", r.final_mse_db},
              {"residuals", r.residuals},
              {"wall_time_s", r.wall_time_s},
              {"eval_time_s", r.eval_time_s},
              {"split_time_s", r.split_time_s},
              {"local_wall_times_s", r.local_wall_times_s},
              {"locals_wall_time_s", r.locals_wall_time_s},
              {"merge_wall_time_s", r.merge_wall_time_s},
              {"replaced_atoms", r.replaced_atoms},
              {"dropped_locals", r.dropped_locals}};
}

inline TrainReport train_report_from_json(const Json& j) {
  TrainReport r;
  r.final_mse_db = j.at("final_mse_db").get<double>();
  r.residuals = j.at("residuals").get<std::vector<double>>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.eval_time_s = j.at("eval_time_s").get<double>();
  r.split_time_s = j.at("split_time_s").get<double>();
  r.local_wall_times_s = j.at("local_wall_times_s").get<std::vector<double>>();
  r.locals_wall_time_s = j.at("locals_wall_time_s").get<double>();
  r.merge_wall_time_s = j.at("merge_wall_time_s").get<double>();
  r.replaced_atoms = j.at("replaced_atoms").get<std::size_t>();
  r.dropped_locals = j.at("dropped_locals").get<std::vector<Index>>();
  return r;
}

} // namespace sparsedict
