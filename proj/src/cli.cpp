#include "mspc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mspc/errors.hpp"
#include "mspc/persist.hpp"
#include "mspc/pipeline.hpp"
#include "mspc/run_config.hpp"

namespace mspc::cli {

namespace {

namespace fs = std::filesystem;
using persist::format_real;

struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App& app) {
    app.add_option("--config", file, "key=value run configuration file");
    app.add_option("--set", sets, "override one config entry, key=value (repeatable)");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!file.empty()) config.apply_text(persist::read_file(file));
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config;
  }
};

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_config(const RunConfig& config, const fs::path& path) {
  ensure_dir(path.parent_path());
  persist::write_file_atomic(path, config.to_text());
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

void warn_recall_mode(const RunConfig& config, std::ostream& err) {
  if (config.recall_mode == eval::RecallMode::paper_literal)
    err << "warning: paper_literal recall is TP/(FP+FN) and is not bounded by 1\n";
}

std::vector<world::Environment> parse_env_list(const std::string& text) {
  std::vector<world::Environment> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(world::parse_environment(item));
  if (out.empty()) throw InvalidArgument("empty environment list");
  return out;
}

std::string tag_of(std::span<const world::Observation> data, const fs::path& path) {
  return data.empty() ? path.stem().string() : data.front().tag;
}

// --- gen-data ---------------------------------------------------------------

struct GenData {
  ConfigFlags flags;
  std::string env;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool training = false;
  bool scene = false;

  void attach(CLI::App& app) {
    flags.attach(app);
    app.add_option("--env", env, "environment: E1, E2 or E3")->required();
    app.add_option("--seed", seed, "data seed (overrides data.seed)");
    app.add_option("--out", out_dir, "output directory (overrides io.out_dir)");
    app.add_flag("--training", training, "also write the exploration run <env>_train.csv");
    app.add_flag("--scene", scene, "also write the arena as <env>.scene");
  }

  int run(std::ostream& out, std::ostream&) const {
    RunConfig config = flags.resolve();
    const world::Environment e = world::parse_environment(env);
    if (seed) config.data_seed = *seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    config.validate();

    const fs::path dir = config.out_dir;
    ensure_dir(dir);
    std::vector<pipeline::Run> runs{pipeline::Run::a, pipeline::Run::b};
    if (training) runs.push_back(pipeline::Run::training);
    for (pipeline::Run r : runs) {
      const auto data = pipeline::make_dataset(config, e, r);
      const fs::path path = dir / (pipeline::run_tag(e, r) + ".csv");
      persist::save_dataset(data, path);
      out << "wrote " << path.string() << " (" << data.size() << " observations)\n";
    }
    if (scene) {
      const fs::path path = dir / (world::to_string(e) + ".scene");
      persist::write_file_atomic(path, world::to_scene_text(world::preset_environment(e)));
      out << "wrote " << path.string() << "\n";
    }
    write_config(config, dir / "gen-data.config");
    return kOk;
  }
};

// --- train ------------------------------------------------------------------

struct Train {
  ConfigFlags flags;
  std::string data;
  std::string model;
  std::string log;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    flags.attach(app);
    app.add_option("--data", data, "training dataset CSV")->required();
    app.add_option("--model", model, "output model file")->required();
    app.add_option("--log", log, "per-iteration error log (default <model>.log.csv)");
    app.add_option("--seed", seed, "weight initialisation seed (overrides net.rng_seed)");
  }

  int run(std::ostream& out, std::ostream&) const {
    RunConfig config = flags.resolve();
    if (seed) config.network.rng_seed = *seed;
    config.validate();
    const auto dataset = persist::load_dataset(data);
    if (dataset.empty()) throw InvalidArgument("training dataset '" + data + "' is empty");
    config.network = pipeline::network_for(config, dataset);
    const pcnet::TrainResult result = pipeline::train_network(config, dataset);

    const fs::path model_path = model;
    ensure_dir(model_path.parent_path());
    persist::save_model(result.weights, config.network, model_path);
    std::string csv = "iteration,visual_mse,tactile_mse\n";
    for (std::size_t i = 0; i < result.log.visual_mse.size(); ++i)
      csv += std::to_string(i) + ',' + format_real(result.log.visual_mse[i]) + ',' +
             format_real(result.log.tactile_mse[i]) + '\n';
    const fs::path log_path = log.empty() ? with_suffix(model_path, ".log.csv") : fs::path(log);
    persist::write_file_atomic(log_path, csv);
    write_config(config, with_suffix(model_path, ".config"));

    out << "wrote " << model_path.string() << " and " << log_path.string() << "\n";
    if (!result.log.visual_mse.empty())
      out << "final reconstruction MSE: visual " << format_real(result.log.visual_mse.back())
          << " tactile " << format_real(result.log.tactile_mse.back()) << "\n";
    return kOk;
  }
};

// --- extract ----------------------------------------------------------------

struct Extract {
  ConfigFlags flags;
  std::string data;
  std::string model;
  std::string method = "learned";
  std::string calib;
  std::string out_file;

  void attach(CLI::App& app) {
    flags.attach(app);
    app.add_option("--data", data, "dataset CSV")->required();
    app.add_option("--out", out_file, "output template file")->required();
    app.add_option("--method", method, "learned or handcrafted")->capture_default_str();
    app.add_option("--model", model, "trained model (learned method)");
    app.add_option("--calib", calib, "calibration dataset for the scaling factors (handcrafted)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    RunConfig config = flags.resolve();
    const eval::Method m = eval::parse_method(method);
    if (m == eval::Method::learned && model.empty())
      throw InvalidArgument("--method learned needs --model");
    if (m == eval::Method::handcrafted && calib.empty())
      throw InvalidArgument("--method handcrafted needs --calib");
    config.validate();

    const auto dataset = persist::load_dataset(data);
    const std::string tag = tag_of(dataset, data);
    eval::TemplateSet set;
    if (m == eval::Method::learned) {
      const persist::LoadedModel loaded = persist::load_model(model);
      config.network = loaded.config;
      set = pipeline::extract_learned(dataset, loaded.weights, loaded.config, tag);
    } else {
      const auto calibration = persist::load_dataset(calib);
      const baseline::ScalingFit fit = pipeline::calibrate(calibration, config.baseline);
      for (const std::string& w : fit.warnings) err << "warning: " << w << "\n";
      set = pipeline::extract_handcrafted(dataset, config.baseline, fit.factors, tag);
      out << "scaling: alpha " << format_real(fit.factors.alpha) << " beta "
          << format_real(fit.factors.beta) << " gamma " << format_real(fit.factors.gamma) << "\n";
    }
    const fs::path path = out_file;
    ensure_dir(path.parent_path());
    persist::save_templates(set, path);
    write_config(config, with_suffix(path, ".config"));
    out << "wrote " << path.string() << " (" << set.entries.size() << " templates)\n";
    return kOk;
  }
};

// --- eval -------------------------------------------------------------------

struct Eval {
  ConfigFlags flags;
  std::string a, b;
  std::string out_dir;
  std::optional<double> tau, theta;
  bool sweep = false;

  void attach(CLI::App& app) {
    flags.attach(app);
    app.add_option("--a", a, "template file of run A (TME rows)")->required();
    app.add_option("--b", b, "template file of run B (TME columns)")->required();
    app.add_option("--out", out_dir, "output directory (overrides io.out_dir)");
    app.add_option("--tau", tau, "spatial proximity threshold in metres (overrides eval.tau)");
    app.add_option("--theta", theta, "match declaration threshold (overrides eval.theta_match)");
    app.add_flag("--sweep", sweep, "sweep theta over the TME row minima and score the best");
  }

  int run(std::ostream& out, std::ostream& err) const {
    RunConfig config = flags.resolve();
    if (tau) config.thresholds.tau = *tau;
    if (theta) config.thresholds.theta_match = *theta;
    if (!out_dir.empty()) config.out_dir = out_dir;
    config.validate();
    warn_recall_mode(config, err);

    const eval::TemplateSet ta = persist::load_templates(a);
    const eval::TemplateSet tb = persist::load_templates(b);
    const pipeline::Evaluation e = pipeline::evaluate_pair(ta, tb, config.angle_weight);

    const fs::path dir = config.out_dir;
    ensure_dir(dir);
    persist::save_matrix_csv(e.tme, dir / "tme.csv");
    persist::save_matrix_csv(e.gtm, dir / "gtm.csv");
    if (e.tme.size() > 0) {
      persist::save_matrix_pgm(e.tme, dir / "tme.pgm");
      persist::save_matrix_pgm(e.gtm, dir / "gtm.pgm");
    }

    persist::ScoreReport report;
    report.thresholds = config.thresholds;
    report.seed = config.data_seed;
    report.method = ta.method;
    report.recall_mode = config.recall_mode;
    report.extra.push_back({"trajectory_a", ta.trajectory_tag});
    report.extra.push_back({"trajectory_b", tb.trajectory_tag});
    if (sweep) {
      const eval::SweepResult s = pipeline::sweep(e, config);
      std::string csv = "theta_match,tp,fp,fn,tn,precision,recall,f1\n";
      for (const eval::SweepRow& r : s.rows)
        csv += format_real(r.theta) + ',' + std::to_string(r.scores.tp) + ',' +
               std::to_string(r.scores.fp) + ',' + std::to_string(r.scores.fn) + ',' +
               std::to_string(r.scores.tn) + ',' + format_real(r.scores.precision) + ',' +
               format_real(r.scores.recall) + ',' + format_real(r.scores.f1) + '\n';
      persist::write_file_atomic(dir / "sweep.csv", csv);
      report.thresholds.theta_match = s.rows[s.best].theta;
      report.scores = s.rows[s.best].scores;
      report.extra.push_back({"sweep_points", std::to_string(s.rows.size())});
    } else {
      report.scores = eval::precision_recall(
          eval::classify_matches(e.tme, e.gtm, config.thresholds), config.recall_mode);
    }
    persist::save_scores(report, dir / "scores.txt");
    write_config(config, dir / "eval.config");

    const eval::Scores& s = report.scores;
    out << "theta_match " << format_real(report.thresholds.theta_match) << ": TP " << s.tp
        << " FP " << s.fp << " FN " << s.fn << " TN " << s.tn << "  P " << format_real(s.precision)
        << " R " << format_real(s.recall) << " F1 " << format_real(s.f1) << "\n";
    return kOk;
  }
};

// --- compare ----------------------------------------------------------------

struct Compare {
  ConfigFlags flags;
  std::string envs = "E1,E2,E3";
  std::string model;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    flags.attach(app);
    app.add_option("--env", envs, "comma-separated environments")->capture_default_str();
    app.add_option("--model", model, "trained model; trained on the E1 exploration run if absent");
    app.add_option("--out", out_dir, "output directory (overrides io.out_dir)");
    app.add_option("--seed", seed, "sets both data.seed and net.rng_seed");
  }

  int run(std::ostream& out, std::ostream& err) const {
    RunConfig config = flags.resolve();
    if (seed) {
      config.data_seed = *seed;
      config.network.rng_seed = *seed;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    const auto env_list = parse_env_list(envs);
    config.validate();
    warn_recall_mode(config, err);

    const fs::path dir = config.out_dir;
    ensure_dir(dir);
    const auto training = pipeline::make_training_dataset(config);
    pcnet::WeightSet weights;
    if (model.empty()) {
      config.network = pipeline::network_for(config, training);
      weights = pipeline::train_network(config, training).weights;
      persist::save_model(weights, config.network, dir / "compare_model.mspc");
    } else {
      persist::LoadedModel loaded = persist::load_model(model);
      config.network = loaded.config;
      weights = std::move(loaded.weights);
    }
    const pipeline::ComparisonReport report =
        pipeline::run_comparison(config, env_list, weights, config.network, training);
    persist::write_file_atomic(dir / "compare.csv", report.to_csv());
    const std::string text = report.to_text();
    persist::write_file_atomic(dir / "compare.txt", text);
    write_config(config, dir / "compare.config");
    out << text;
    return kOk;
  }
};

// --- inspect ----------------------------------------------------------------

struct Inspect {
  std::string file;

  void attach(CLI::App& app) { app.add_option("file", file, "file to describe")->required(); }

  int run(std::ostream& out, std::ostream&) const {
    const std::string bytes = persist::read_file(file);
    if (bytes.starts_with(std::string_view(persist::kModelMagic, 4))) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
      const persist::LoadedModel m = persist::decode_model({p, bytes.size()});
      out << "model file, format version " << int(persist::kModelVersion) << ", " << bytes.size()
          << " bytes, checksum ok\n"
          << persist::config_to_text(m.config);
      for (const auto* w : m.weights.matrices())
        out << "matrix " << w->rows() << "x" << w->cols() << "\n";
      return kOk;
    }
    if (bytes.starts_with("# mspc-templates")) {
      const eval::TemplateSet set = persist::templates_from_csv(bytes);
      std::istringstream in(bytes);
      std::string line;
      while (std::getline(in, line) && line.starts_with("#")) out << line << "\n";
      out << "templates " << set.entries.size() << "\n";
      return kOk;
    }
    if (bytes.starts_with("tag,")) {
      const auto data = persist::dataset_from_csv(bytes);
      out << "dataset, " << data.size() << " observations";
      if (!data.empty())
        out << ", " << data.front().visual.size() << " visual and " << data.front().tactile.size()
            << " tactile values, tag " << data.front().tag;
      out << "\n";
      return kOk;
    }
    if (bytes.starts_with("P5")) {
      std::istringstream in(bytes);
      std::string magic;
      int w = 0, h = 0, maxval = 0;
      in >> magic >> w >> h >> maxval;
      out << "graymap " << h << " rows x " << w << " columns, max " << maxval << "\n";
      return kOk;
    }
    // Text formats: print the first lines.
    std::istringstream in(bytes);
    std::string line;
    for (int i = 0; i < 20 && std::getline(in, line); ++i) out << line << "\n";
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visuo-tactile predictive coding place recognition", "mspc"};
  app.require_subcommand(1);

  GenData gen;
  Train train;
  Extract extract;
  Eval evaluate;
  Compare compare;
  Inspect inspect;
  CLI::App* c_gen = app.add_subcommand("gen-data", "generate runs A and B of one environment");
  CLI::App* c_train = app.add_subcommand("train", "train the network on a dataset");
  CLI::App* c_extract = app.add_subcommand("extract", "turn a dataset into a template file");
  CLI::App* c_eval = app.add_subcommand("eval", "score two template files");
  CLI::App* c_compare =
      app.add_subcommand("compare", "learned vs hand-crafted features over environments");
  CLI::App* c_inspect = app.add_subcommand("inspect", "print a file's header");
  gen.attach(*c_gen);
  train.attach(*c_train);
  extract.attach(*c_extract);
  evaluate.attach(*c_eval);
  compare.attach(*c_compare);
  inspect.attach(*c_inspect);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_gen->parsed()) return gen.run(out, err);
    if (c_train->parsed()) return train.run(out, err);
    if (c_extract->parsed()) return extract.run(out, err);
    if (c_eval->parsed()) return evaluate.run(out, err);
    if (c_compare->parsed()) return compare.run(out, err);
    if (c_inspect->parsed()) return inspect.run(out, err);
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const DivergenceError& e) {
    err << "diverged in layer " << e.layer() << ": " << e.what() << "\n";
    return kDivergence;
  } catch (const IncompatibleError& e) {
    err << "incompatible inputs: " << e.what() << "\n";
    return kIncompatible;
  } catch (const ShapeError& e) {
    err << "incompatible inputs: " << e.what() << "\n";
    return kIncompatible;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace mspc::cli
