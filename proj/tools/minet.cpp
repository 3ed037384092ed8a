#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "minet/arch/checkpoint.hpp"
#include "minet/cli/figures.hpp"
#include "minet/cli/run_manifest.hpp"
#include "minet/data/degrade.hpp"
#include "minet/data/image.hpp"
#include "minet/data/sample_io.hpp"
#include "minet/grad_suite.hpp"
#include "minet/ops.hpp"
#include "minet/runtime.hpp"
#include "minet/train/ablation.hpp"
#include "minet/train/evaluate.hpp"
#include "minet/train/metrics.hpp"
#include "minet/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace minet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

using Clock = std::chrono::steady_clock;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct RunContext {
  std::string command_line;
  Clock::time_point start = Clock::now();
  std::string started = utc_timestamp();

  void finish(const fs::path& dir, const KeyValues& config, std::uint64_t seed) const {
    RunManifest m;
    m.command = command_line;
    m.config = config;
    m.seed = seed;
    m.artifacts = list_artifacts(dir);
    m.started = started;
    m.duration_s = std::chrono::duration<double>(Clock::now() - start).count();
    write_manifest(dir, m);
    std::cout << "run directory: " << dir.string() << "\n";
  }
};

fs::path resolve_out(const std::string& out, const std::string& command, const KeyValues& config) {
  return out.empty() ? default_run_dir(command, config) : fs::path(out);
}

// gen-data

struct GenDataArgs {
  std::size_t count = 200, size = 64, scale = 2;
  std::uint64_t seed = 0;
  std::string degradation = "kspace_truncation";
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, const RunContext& ctx) {
  DatasetSpec spec{a.count, a.size, a.scale, a.seed, parse_degradation(a.degradation)};
  KeyValues kv{{"count", std::to_string(a.count)},
               {"size", std::to_string(a.size)},
               {"scale", std::to_string(a.scale)},
               {"seed", std::to_string(a.seed)},
               {"degradation", std::string(degradation_name(spec.method))}};
  const fs::path dir = resolve_out(a.out, "gen-data", kv);
  write_dataset(spec, dir);
  const Dataset data = load_dataset(dir);
  std::cout << "generated " << a.count << " samples: train " << data.train.size() << ", val " << data.val.size()
            << ", test " << data.test.size() << "\n";
  ctx.finish(dir, kv, a.seed);
  return kExitOk;
}

// train / ablate share config handling

struct TrainArgs {
  std::string config, variant, data, out;
  std::vector<std::string> sets;
  std::size_t epochs = 0, batch = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_train_overrides(CLI::App* sub, TrainArgs& a) {
  sub->add_option("--config", a.config, "key=value config file");
  sub->add_option("--data", a.data, "dataset root written by gen-data");
  sub->add_option("--epochs", a.epochs, "override epochs");
  sub->add_option("--batch", a.batch, "override batch size");
  sub->add_option("--lr", a.lr, "override learning rate");
  sub->add_option("--set", a.sets, "extra key=value override, repeatable");
  sub->add_option("--out", a.out, "run directory (default: $MINET_RUN_ROOT/<cmd>-<hash>)");
}

TrainConfig build_train_config(const TrainArgs& a) {
  TrainConfig config;
  KeyValues kv;
  if (!a.config.empty()) kv = parse_key_values(read_text(a.config));
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!a.variant.empty()) kv["variant"] = a.variant;
  if (!a.data.empty()) kv["data"] = a.data;
  if (a.epochs) kv["epochs"] = std::to_string(a.epochs);
  if (a.batch) kv["batch"] = std::to_string(a.batch);
  if (a.lr > 0.0) kv["lr"] = format_double(a.lr);
  if (a.seed_given) kv["seed"] = std::to_string(a.seed);
  apply_train_keys(config, kv);
  config.validate();
  if (config.data.empty()) throw ConfigError("no dataset given (use --data or a 'data' config key)");
  return config;
}

int cmd_train(const TrainArgs& a, const RunContext& ctx) {
  const TrainConfig config = build_train_config(a);
  const Dataset data = load_dataset(config.data);
  const KeyValues kv = train_keys(config);
  const fs::path dir = resolve_out(a.out, "train", kv);
  fs::create_directories(dir);
  std::cout << "training variant " << variant_name(config.model.variant) << " on " << data.train.size()
            << " samples, " << config.epochs << " epochs\n";
  const TrainResult result = train(config, data, [](const EpochRecord& e) {
    std::cout << "epoch " << std::setw(3) << e.epoch << "  loss " << std::scientific << std::setprecision(4)
              << e.train_loss << "  val psnr " << std::fixed << std::setprecision(3) << e.val_psnr << " dB\n"
              << std::flush;
  });
  write_training_artifacts(dir, config, result);
  std::cout << "best epoch " << result.best_epoch << " (val psnr " << std::fixed << std::setprecision(3)
            << result.best_val_psnr << " dB)\n";
  ctx.finish(dir, kv, config.seed);
  return kExitOk;
}

// eval

struct EvalArgs {
  std::string checkpoint, split = "test", data, out;
  std::size_t batch = 4;
};

std::string setting(const Checkpoint& ck, const char* key) {
  const auto it = ck.settings.find(key);
  return it == ck.settings.end() ? std::string() : it->second;
}

int cmd_eval(const EvalArgs& a, const RunContext& ctx) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const std::string data_root = a.data.empty() ? setting(ck, "data") : a.data;
  if (data_root.empty()) throw ConfigError("checkpoint records no dataset; pass --data");
  const Dataset data = load_dataset(data_root);
  const auto& samples = data.split(a.split);
  if (samples.empty()) throw ConfigError("split '" + a.split + "' is empty");

  const MetricsReport report = evaluate(ck.params, ck.config, samples, a.batch);
  std::cout << format_report(report);
  KeyValues kv = ck.settings;
  kv["checkpoint"] = fs::absolute(a.checkpoint).lexically_normal().string();
  kv["split"] = a.split;
  kv["data"] = data_root;
  const fs::path dir = resolve_out(a.out, "eval", kv);
  fs::create_directories(dir);
  write_text(dir / "metrics.csv", report_csv(report));
  write_text(dir / "metrics.txt", format_report(report));
  const auto seed_it = ck.settings.find("seed");
  ctx.finish(dir, kv, seed_it == ck.settings.end() ? 0 : parse_u64("seed", seed_it->second));
  return kExitOk;
}

// ablate

struct AblateArgs {
  TrainArgs train;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::string> variants;
};

int cmd_ablate(const AblateArgs& a, const RunContext& ctx) {
  const TrainConfig base = build_train_config(a.train);
  const Dataset data = load_dataset(base.data);
  std::vector<Variant> variants;
  for (const auto& v : a.variants) variants.push_back(parse_variant(v));
  if (variants.empty()) variants.assign(std::begin(kAllVariants), std::end(kAllVariants));

  KeyValues kv = train_keys(base);
  kv.erase("variant");
  kv.erase("seed");
  std::string seeds, names;
  for (auto s : a.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  for (auto v : variants) names += (names.empty() ? "" : ",") + std::string(variant_name(v));
  kv["seeds"] = seeds;
  kv["variants"] = names;
  const fs::path dir = resolve_out(a.train.out, "ablate", kv);
  fs::create_directories(dir);

  const AblationResult result = run_ablation(base, data, a.seeds, variants, [](const AblationRun& r) {
    std::cout << std::left << std::setw(7) << variant_name(r.variant) << " seed " << r.seed << "  psnr "
              << std::fixed << std::setprecision(3) << r.psnr.mean << " dB  nmse " << std::scientific
              << std::setprecision(3) << r.nmse.mean << "  ssim " << std::fixed << std::setprecision(4)
              << r.ssim.mean << "\n"
              << std::flush;
  });
  const std::string table = ablation_markdown(result);
  std::cout << table;
  write_text(dir / "ablation.md", table);
  write_text(dir / "ablation.csv", ablation_csv(result));
  ctx.finish(dir, kv, a.seeds.front());
  return kExitOk;
}

// gradcheck

struct GradcheckArgs {
  std::string module;
  std::size_t coords = 20;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const auto start = Clock::now();
  const auto entries = run_gradient_suite(a.module, a.coords);
  bool ok = true;
  for (const auto& e : entries) {
    std::size_t skipped = 0;
    for (const auto& t : e.report.tensors) skipped += t.coords_skipped;
    std::printf("%-28s %-6s max_rel %.3e  tol %.0e  skipped %zu  %s\n", e.name.c_str(), e.group.c_str(),
                e.report.max_rel_error(), e.tolerance, skipped, e.passed() ? "ok" : "FAIL");
    ok = ok && e.passed();
  }
  std::printf("%zu checks in %.1f s: %s\n", entries.size(),
              std::chrono::duration<double>(Clock::now() - start).count(), ok ? "all passed" : "FAILURES");
  return ok ? kExitOk : kExitNumerical;
}

// export-figures

struct FiguresArgs {
  std::string run, data, out;
  std::size_t count = 4;
};

std::vector<double> read_loss_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<double> loss;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    loss.push_back(parse_double("loss", line.substr(comma + 1)));
  }
  return loss;
}

int cmd_export_figures(const FiguresArgs& a, const RunContext& ctx) {
  const fs::path run = a.run;
  const fs::path dir = a.out.empty() ? run / "figures" : fs::path(a.out);
  fs::create_directories(dir);

  const std::vector<double> loss = read_loss_csv(run / "loss.csv");
  write_pgm(dir / "loss_curve.pgm", plot_curve(loss));
  {
    std::ostringstream csv;
    csv << "step,loss\n";
    for (std::size_t i = 0; i < loss.size(); ++i) csv << i + 1 << ',' << format_double(loss[i]) << '\n';
    write_text(dir / "loss_curve.csv", csv.str());
  }

  const Checkpoint ck = load_checkpoint(run / "checkpoint.mint");
  const std::string data_root = a.data.empty() ? setting(ck, "data") : a.data;
  if (data_root.empty()) throw ConfigError("checkpoint records no dataset; pass --data");
  const Dataset data = load_dataset(data_root);
  const std::size_t n = std::min(a.count, data.test.size());
  const std::span<const SamplePair> samples(data.test.data(), n);
  const std::vector<Tensor> sr = predict(ck.params, ck.config, samples);

  std::ostringstream csv;
  csv << "seed,method,nmse,psnr,ssim\n";
  csv << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    const SamplePair& s = samples[i];
    const Tensor bic = bicubic_upsample(s.y_t2, ck.config.scale);
    const std::string stem = std::to_string(s.seed);
    write_pgm(dir / (stem + "_lr.pgm"), s.y_t2);
    write_pgm(dir / (stem + "_bicubic.pgm"), bic);
    write_pgm(dir / (stem + "_sr.pgm"), sr[i]);
    write_pgm(dir / (stem + "_gt.pgm"), s.x_t2);
    write_pgm(dir / (stem + "_t1.pgm"), s.x_t1);
    const Tensor err_sr = error_map(sr[i], s.x_t2), err_bic = error_map(bic, s.x_t2);
    write_pgm(dir / (stem + "_error_sr.pgm"), err_sr);
    write_pgm(dir / (stem + "_error_bicubic.pgm"), err_bic);
    const Tensor tiles[] = {bic, sr[i], s.x_t2, err_bic, err_sr};
    write_pgm(dir / (stem + "_panel.pgm"), hstack_panel(tiles));
    for (const auto& [name, pred] : {std::pair{"minet", &sr[i]}, std::pair{"bicubic", &bic}}) {
      const SampleMetrics m = measure(s.seed, *pred, s.x_t2);
      csv << s.seed << ',' << name << ',' << m.nmse << ',' << m.psnr << ',' << m.ssim << '\n';
    }
  }
  write_text(dir / "figure_metrics.csv", csv.str());

  KeyValues kv = ck.settings;
  kv["run"] = fs::absolute(run).lexically_normal().string();
  kv["count"] = std::to_string(n);
  const auto seed_it = ck.settings.find("seed");
  ctx.finish(dir, kv, seed_it == ck.settings.end() ? 0 : parse_u64("seed", seed_it->second));
  return kExitOk;
}

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"minet: multi-contrast MRI super-resolution toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic T1/T2 phantom dataset");
  gen_cmd->add_option("--count", gen.count, "number of samples")->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "HR image side")->capture_default_str();
  gen_cmd->add_option("--scale", gen.scale, "downsampling factor r")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "seed of the first sample")->capture_default_str();
  gen_cmd->add_option("--degradation", gen.degradation, "kspace_truncation | bicubic_decimation")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "dataset directory");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train one model variant");
  add_train_overrides(train_cmd, tr);
  train_cmd->add_option("--variant", tr.variant, "full | no_aux | no_int | no_att");
  auto* seed_opt = train_cmd->add_option("--seed", tr.seed, "override seed");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint.mint")->required();
  eval_cmd->add_option("--split", ev.split, "train | val | test")->capture_default_str();
  eval_cmd->add_option("--data", ev.data, "dataset root (default: the one recorded in the checkpoint)");
  eval_cmd->add_option("--batch", ev.batch, "inference batch size")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "run directory");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "train and test every variant over several seeds");
  add_train_overrides(ablate_cmd, ab.train);
  ablate_cmd->add_option("--seeds", ab.seeds, "comma-separated seeds")->delimiter(',')->capture_default_str();
  ablate_cmd->add_option("--variants", ab.variants, "comma-separated subset of variants")->delimiter(',');

  GradcheckArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every op and module");
  grad_cmd->add_option("--module", gc.module, "single entry name, or 'op' / 'module'");
  grad_cmd->add_option("--coords", gc.coords, "coordinates per tensor")->capture_default_str();

  FiguresArgs fig;
  auto* fig_cmd = app.add_subcommand("export-figures", "loss curve, SR panels and error maps for a training run");
  fig_cmd->add_option("--run", fig.run, "training run directory")->required();
  fig_cmd->add_option("--data", fig.data, "dataset root (default: the one recorded in the checkpoint)");
  fig_cmd->add_option("--count", fig.count, "number of test samples")->capture_default_str();
  fig_cmd->add_option("--out", fig.out, "output directory (default: <run>/figures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  RunContext ctx{join_argv(argc, argv)};
  try {
    if (*gen_cmd) return cmd_gen_data(gen, ctx);
    if (*train_cmd) {
      tr.seed_given = seed_opt->count() > 0;
      return cmd_train(tr, ctx);
    }
    if (*eval_cmd) return cmd_eval(ev, ctx);
    if (*ablate_cmd) return cmd_ablate(ab, ctx);
    if (*grad_cmd) return cmd_gradcheck(gc);
    if (*fig_cmd) return cmd_export_figures(fig, ctx);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
