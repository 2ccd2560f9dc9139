#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modelfuzz/eval.hpp"
#include "modelfuzz/fuzz_loop.hpp"
#include "modelfuzz/path_model.hpp"
#include "modelfuzz/rng.hpp"
#include "modelfuzz/targets.hpp"
#include "modelfuzz/types.hpp"

namespace py = pybind11;
using namespace modelfuzz;

namespace {

Bytes to_bytes(const py::bytes& data) {
  const std::string s = data;
  return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& data) {
  return py::bytes(reinterpret_cast<const char*>(data.data()), data.size());
}

std::vector<std::pair<Bytes, PathId>> to_examples(
    const std::vector<std::pair<py::bytes, std::uint64_t>>& examples) {
  std::vector<std::pair<Bytes, PathId>> out;
  out.reserve(examples.size());
  for (const auto& [input, label] : examples) {
    out.emplace_back(to_bytes(input), PathId{label});
  }
  return out;
}

std::vector<Bytes> to_byte_rows(const std::vector<py::bytes>& rows) {
  std::vector<Bytes> out;
  out.reserve(rows.size());
  for (const py::bytes& row : rows) out.push_back(to_bytes(row));
  return out;
}

py::dict checkpoint_dict(const Checkpoint& c) {
  py::dict d;
  d["exec_index"] = c.exec_index;
  d["paths"] = c.paths;
  d["edge_buckets"] = c.edge_buckets;
  d["crashes"] = c.crashes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Model-guided greybox fuzzing testbed";

  m.def("list_targets", [] {
    py::list out;
    for (const TargetDescriptor& d : list_targets()) {
      py::dict item;
      item["name"] = d.name;
      item["description"] = d.description;
      item["max_input_len"] = d.max_input_len;
      py::list corpus;
      for (const Bytes& seed : d.seed_corpus) corpus.append(from_bytes(seed));
      item["seed_corpus"] = std::move(corpus);
      out.append(std::move(item));
    }
    return out;
  });

  m.def("execute", [](const std::string& target, const py::bytes& input) {
    const ExecutionTrace trace = execute(target, to_bytes(input));
    py::dict out;
    out["num_edges"] = trace.edges.size();
    out["crashed"] = trace.crashed;
    if (trace.crash_site) {
      out["crash_site"] = *trace.crash_site;
    } else {
      out["crash_site"] = py::none();
    }
    out["path"] = path_hex(path_id(trace));
    return out;
  });

  m.def("featurize", [](const py::bytes& input) {
    return featurize(to_bytes(input));
  });

  m.def("entropy", [](const std::vector<double>& distribution) {
    return entropy(distribution);
  });

  m.def("rank_scores",
        [](const std::vector<double>& scores, std::uint64_t seed) {
          Rng rng(seed);
          return rank_scores(scores, rng);
        },
        py::arg("scores"), py::arg("seed") = 0);

  py::class_<PathModel>(m, "PathModel")
      .def(py::init<>())
      .def("train",
           [](PathModel& model,
              const std::vector<std::pair<py::bytes, std::uint64_t>>& ex) {
             const auto examples = to_examples(ex);
             const TrainStats stats = model.train(examples);
             py::dict out;
             out["classes"] = stats.classes;
             out["total_passes"] = stats.total_passes;
             out["examples"] = stats.examples;
             return out;
           })
      .def("retrain",
           [](PathModel& model,
              const std::vector<std::pair<py::bytes, std::uint64_t>>& ex) {
             const auto examples = to_examples(ex);
             const TrainStats stats = model.retrain(examples);
             py::dict out;
             out["classes"] = stats.classes;
             out["total_passes"] = stats.total_passes;
             out["examples"] = stats.examples;
             return out;
           })
      .def("predict",
           [](const PathModel& model, const py::bytes& input) {
             return model.predict(to_bytes(input));
           })
      .def_static("cold_start_predict", &PathModel::cold_start_predict)
      .def("entropy_scores",
           [](const PathModel& model, const std::vector<py::bytes>& rows) {
             return model.entropy_scores(to_byte_rows(rows));
           })
      .def("rank",
           [](const PathModel& model, const std::vector<py::bytes>& rows,
              std::uint64_t seed) {
             Rng rng(seed);
             return model.rank(to_byte_rows(rows), rng);
           },
           py::arg("candidates"), py::arg("seed") = 0)
      .def_property_readonly("class_count", &PathModel::class_count)
      .def_property_readonly("example_count", &PathModel::example_count)
      .def_property_readonly("feature_count", &PathModel::feature_count)
      .def("class_labels",
           [](const PathModel& model) {
             std::vector<std::uint64_t> labels;
             for (const PathId& id : model.class_labels()) {
               labels.push_back(id.label);
             }
             return labels;
           })
      .def("to_json", &PathModel::to_json)
      .def_static("from_json", &PathModel::from_json);

  m.def(
      "fuzz",
      [](const std::string& target_name, const std::string& strategy,
         std::uint64_t budget, std::uint64_t warmup_execs,
         std::size_t num_generate, double alpha,
         std::uint64_t checkpoint_every, std::uint64_t seed,
         const std::string& retrain_cadence) {
        StrategyConfig config;
        config.strategy = parse_strategy(strategy);
        config.budget = budget;
        config.warmup_execs = warmup_execs;
        config.num_generate = num_generate;
        config.alpha = alpha;
        config.checkpoint_every = checkpoint_every;
        config.rng_seed = seed;
        if (retrain_cadence == "input") {
          config.retrain_cadence = RetrainCadence::kPerInput;
        } else if (retrain_cadence != "batch") {
          throw std::invalid_argument("retrain_cadence must be batch|input");
        }
        const Target& target = find_target(target_name);
        const WarmState warm = warmup(target, config);
        const RunLog log = run_strategy(target, config, warm);

        py::dict out;
        out["target"] = target_name;
        out["strategy"] = strategy_name(config.strategy);
        out["executions"] = log.records.size();
        out["paths"] = log.paths_found;
        out["edge_buckets"] = log.edge_buckets_found;
        out["crashes"] = log.crash_count;
        out["queue_size"] = log.final_queue.size();
        py::list checkpoints;
        for (const Checkpoint& c : log.checkpoints) {
          checkpoints.append(checkpoint_dict(c));
        }
        out["checkpoints"] = std::move(checkpoints);
        py::list crash_inputs;
        for (const Bytes& input : log.crash_inputs) {
          crash_inputs.append(from_bytes(input));
        }
        out["crash_inputs"] = std::move(crash_inputs);
        return out;
      },
      py::arg("target"), py::arg("strategy") = "fidgety",
      py::arg("budget") = 20000, py::arg("warmup_execs") = 2000,
      py::arg("num_generate") = 256, py::arg("alpha") = 0.25,
      py::arg("checkpoint_every") = 2000, py::arg("seed") = 0,
      py::arg("retrain_cadence") = "batch");

  m.def(
      "run_experiment",
      [](const std::vector<std::string>& targets,
         const std::vector<std::uint64_t>& seeds, std::uint64_t budget,
         std::uint64_t warmup_execs, std::size_t num_generate, double alpha,
         std::uint64_t checkpoint_every, const std::string& out_dir) {
        EvalConfig config;
        config.targets = targets;
        if (!seeds.empty()) config.seeds = seeds;
        config.base.budget = budget;
        config.base.warmup_execs = warmup_execs;
        config.base.num_generate = num_generate;
        config.base.alpha = alpha;
        config.base.checkpoint_every = checkpoint_every;
        const EvalResult result = run_experiment(config, out_dir);

        py::dict out;
        out["grid"] = result.grid;
        out["targets"] = result.targets;
        py::dict mean;
        py::dict se;
        for (std::size_t s = 0; s < result.strategies.size(); ++s) {
          const char* name = strategy_name(result.strategies[s]);
          mean[name] = result.mean[s];
          se[name] = result.se[s];
        }
        out["mean"] = std::move(mean);
        out["se"] = std::move(se);
        return out;
      },
      py::arg("targets") = std::vector<std::string>{},
      py::arg("seeds") = std::vector<std::uint64_t>{},
      py::arg("budget") = 20000, py::arg("warmup_execs") = 2000,
      py::arg("num_generate") = 256, py::arg("alpha") = 0.25,
      py::arg("checkpoint_every") = 2000, py::arg("out_dir") = "");
}
