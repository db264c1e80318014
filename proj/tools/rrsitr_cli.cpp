// Copyright 2026 The rrsitr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rrsitr: generate data, inject noise, train, ablate, evaluate and export
// weight traces.
//
// Exit codes: 0 ok, 2 usage/config, 3 data/format, 4 numeric divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rrsitr/dataset.hpp"
#include "rrsitr/errors.hpp"
#include "rrsitr/evaluation.hpp"
#include "rrsitr/heads.hpp"
#include "rrsitr/hyper.hpp"
#include "rrsitr/runtime.hpp"
#include "rrsitr/selfpaced.hpp"
#include "rrsitr/trainer.hpp"

#ifndef RRSITR_GIT_DESCRIBE
#define RRSITR_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace rrsitr {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

constexpr const char* kSeedEnv = "RRSITR_SEED";

// --seed if given, else $RRSITR_SEED, else 0.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() > 0) return value;
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto parsed = std::stoull(env, &used);
      if (used == std::string(env).size()) return parsed;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(kSeedEnv) + "='" + env + "' is not an unsigned integer");
  }
  return 0;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in '" + path.string() + "': " + e.what(), e.byte);
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

fs::path sidecar_manifest(const fs::path& dataset) {
  return fs::path(dataset.string() + ".manifest.json");
}

// Provenance of a dataset file: its sidecar manifest if one exists.
json dataset_record(const fs::path& path) {
  json j{{"path", path.string()}};
  const fs::path sidecar = sidecar_manifest(path);
  if (fs::exists(sidecar)) j["provenance"] = read_json(sidecar);
  return j;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string joined_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hyperparameter flags.

struct HyperFlags {
  Hyper values;
  std::string config_path;
  std::string local_aggregation = "frobenius";
  std::string rtl_scope = "full_batch";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  // Setters for the flags given on the command line; applied over --config.
  std::vector<std::pair<CLI::Option*, std::function<void(Hyper&)>>> setters;

  template <typename T>
  void add(CLI::App* app, const std::string& name, T Hyper::*field, const std::string& help) {
    auto* opt = app->add_option(name, values.*field, help)->capture_default_str();
    setters.emplace_back(opt, [this, field](Hyper& h) { h.*field = values.*field; });
  }

  // with_epochs=false leaves --epochs free for the caller.
  void attach(CLI::App* app, bool with_epochs = true) {
    app->add_option("--config", config_path,
                    "JSON hyperparameters: a run manifest (its \"hyper\" field) or a bare "
                    "object; explicit flags override it");
    add(app, "--tau", &Hyper::tau, "InfoNCE temperature [desk-scale default]");
    add(app, "--gamma1", &Hyper::gamma1, "clean/ambiguous loss threshold");
    add(app, "--gamma2", &Hyper::gamma2, "ambiguous/noisy loss threshold");
    add(app, "--sigma", &Hyper::sigma, "base triplet margin");
    add(app, "--lambda1", &Hyper::lambda1, "weight of the ambiguous-pair loss");
    add(app, "--lambda2", &Hyper::lambda2, "weight of the triplet loss");
    add(app, "--alpha", &Hyper::alpha, "global/local fusion weight at inference");
    add(app, "--lr", &Hyper::lr,
        "peak learning rate [desk-scale default; 7e-6 is the CLIP fine-tuning value]");
    add(app, "--weight-decay", &Hyper::weight_decay, "decoupled weight decay");
    add(app, "--warmup", &Hyper::warmup_steps, "linear warm-up steps");
    add(app, "--max-grad-norm", &Hyper::max_grad_norm, "gradient-norm clip");
    if (with_epochs) add(app, "--epochs", &Hyper::epochs, "training epochs");
    add(app, "--batch", &Hyper::batch_size, "pairs per batch");
    add(app, "--dim-out", &Hyper::dim_out,
        "projection width, 0 = input width [desk-scale default]");
    add(app, "--init-noise-std", &Hyper::init_noise_std,
        "std of the Gaussian added to the identity head init [desk-scale default]");
    add(app, "--gamma2-final", &Hyper::gamma2_final,
        "grow gamma2 linearly to this value by the last epoch; <= gamma2 disables");
    auto* agg = app->add_option("--local-aggregation", local_aggregation,
                                "local block reduction: frobenius or mean")
                    ->check(CLI::IsMember({"frobenius", "mean"}))
                    ->capture_default_str();
    setters.emplace_back(agg, [this](Hyper& h) {
      h.local_aggregation = parse_local_aggregation(local_aggregation);
    });
    auto* scope = app->add_option("--rtl-scope", rtl_scope,
                                  "anchors of the triplet loss: full_batch or noisy_only")
                      ->check(CLI::IsMember({"full_batch", "noisy_only"}))
                      ->capture_default_str();
    setters.emplace_back(scope, [this](Hyper& h) { h.rtl_scope = parse_rtl_scope(rtl_scope); });
    auto* s1 = app->add_flag("--s1-includes-ambiguous", values.s1_includes_ambiguous,
                             "also count ambiguous pairs in the clean-pair loss");
    setters.emplace_back(s1, [this](Hyper& h) {
      h.s1_includes_ambiguous = values.s1_includes_ambiguous;
    });
    seed_opt = app->add_option("--seed", seed, std::string("run seed (fallback: $") +
                                                   kSeedEnv + ", then 0)");
  }

  Hyper resolve() const {
    Hyper h;
    if (!config_path.empty()) {
      const json j = read_json(config_path);
      h = (j.contains("hyper") ? j.at("hyper") : j).get<Hyper>();
    }
    for (const auto& [opt, set] : setters) {
      if (opt->count() > 0) set(h);
    }
    if (seed_opt->count() > 0 || config_path.empty() || std::getenv(kSeedEnv) != nullptr) {
      h.seed = resolve_seed(seed_opt, seed);
    }
    h.validate();
    return h;
  }
};

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  SyntheticConfig config;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string out;
  std::size_t val_n = 0;
  std::size_t test_n = 0;
  std::string val_out;
  std::string test_out;
};

void print_summary(const std::string& label, const Dataset& d) {
  const Eigen::MatrixXf s = d.image_global * d.text_global.transpose();
  const double matched = s.diagonal().cast<double>().mean();
  const double n = static_cast<double>(d.n_pairs());
  const double off = n > 1 ? (s.cast<double>().sum() - matched * n) / (n * n - n) : 0.0;
  std::cout << label << ": n=" << d.n_pairs() << " dim=" << d.dim << " d1=" << d.d1
            << " d2=" << d.d2 << " noisy=" << d.n_noisy()
            << " mean_matched_cos=" << matched << " mean_unmatched_cos=" << off << '\n';
}

void write_gen_manifest(const fs::path& out, const GenArgs& a, const std::string& split,
                        std::size_t offset, std::size_t count, const std::string& cmd) {
  const auto& c = a.config;
  write_json(json{{"command", cmd},
                  {"kind", "synthetic"},
                  {"split", split},
                  {"rows", {offset, offset + count}},
                  {"generator",
                   {{"n_total", c.n_pairs},
                    {"n_classes", c.n_classes},
                    {"dim", c.dim},
                    {"d1", c.d1},
                    {"d2", c.d2},
                    {"intra_class_spread", c.intra_class_spread},
                    {"modality_noise", c.modality_noise},
                    {"nuisance_rank", c.nuisance_rank},
                    {"nuisance_scale", c.nuisance_scale},
                    {"seed", c.seed}}},
                  {"git_describe", RRSITR_GIT_DESCRIBE}},
             sidecar_manifest(out));
}

int run_gen(GenArgs a, const std::string& cmd) {
  a.config.seed = resolve_seed(a.seed_opt, a.seed);
  if ((a.val_n > 0) != !a.val_out.empty()) {
    throw ConfigError("--val-n and --val-out must be given together");
  }
  if ((a.test_n > 0) != !a.test_out.empty()) {
    throw ConfigError("--test-n and --test-out must be given together");
  }
  const std::size_t train_n = a.config.n_pairs;
  a.config.n_pairs = train_n + a.val_n + a.test_n;
  const Dataset all = generate_synthetic(a.config);

  std::size_t offset = 0;
  const auto emit = [&](const std::string& split, std::size_t count, const std::string& path) {
    std::vector<std::size_t> rows(count);
    std::iota(rows.begin(), rows.end(), offset);
    const Dataset part = all.subset(rows);
    write_dataset(part, path);
    write_gen_manifest(path, a, split, offset, count, cmd);
    print_summary(split + " -> " + path, part);
    offset += count;
  };
  emit("train", train_n, a.out);
  if (a.val_n > 0) emit("val", a.val_n, a.val_out);
  if (a.test_n > 0) emit("test", a.test_n, a.test_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// inject

struct InjectArgs {
  std::string in;
  std::string out;
  double rho = 0.0;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_inject(const InjectArgs& a, const std::string& cmd) {
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed);
  const Dataset clean = read_dataset(a.in);
  const Dataset noisy = inject_noise(clean, {a.rho, seed});
  write_dataset(noisy, a.out);
  json manifest{{"command", cmd},
                {"kind", "noise_injection"},
                {"input", dataset_record(a.in)},
                {"rho", a.rho},
                {"seed", seed},
                {"n_pairs", noisy.n_pairs()},
                {"n_noisy", noisy.n_noisy()},
                {"git_describe", RRSITR_GIT_DESCRIBE}};
  write_json(manifest, sidecar_manifest(a.out));
  std::cout << "flipped " << noisy.n_noisy() << " of " << noisy.n_pairs()
            << " pairs (rho=" << a.rho << ", seed=" << seed << ") -> " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train / ablate / trace

struct TrainArgs {
  HyperFlags hyper;
  std::string train;
  std::string val;
  std::string test;
  std::string out_dir;
  std::string variant = "full";
  std::vector<std::size_t> trace_epochs;
  bool timing = false;
  bool quiet = false;
};

struct LoadedData {
  Dataset train;
  std::optional<Dataset> val;
  std::optional<Dataset> test;
};

LoadedData load_data(const TrainArgs& a) {
  LoadedData d{read_dataset(a.train), std::nullopt, std::nullopt};
  if (!a.val.empty()) d.val = read_dataset(a.val);
  if (!a.test.empty()) {
    d.test = read_dataset(a.test);
    if (d.test->n_noisy() != 0) {
      throw DataError("test split '" + a.test + "' contains " +
                      std::to_string(d.test->n_noisy()) + " pairs with y=0");
    }
  }
  return d;
}

json run_manifest(const std::string& cmd, const TrainArgs& a, const Hyper& h,
                  const json& outputs) {
  json data{{"train", dataset_record(a.train)}};
  if (!a.val.empty()) data["val"] = dataset_record(a.val);
  if (!a.test.empty()) data["test"] = dataset_record(a.test);
  return json{{"command", cmd},          {"hyper", h},
              {"seed", h.seed},          {"variant", a.variant},
              {"data", data},            {"git_describe", RRSITR_GIT_DESCRIBE},
              {"outputs", outputs}};
}

TrainOptions make_options(const TrainArgs& a, const LoadedData& data, Variant variant,
                          const std::string& label) {
  TrainOptions o;
  o.variant = variant;
  o.validation = data.val ? &*data.val : nullptr;
  o.trace_epochs = {a.trace_epochs.begin(), a.trace_epochs.end()};
  if (!a.quiet) {
    o.on_epoch = [label](const EpochRecord& r) {
      std::cerr << '[' << label << "] epoch " << r.epoch << " L=" << r.overall
                << " clean/amb/noisy=" << r.n_clean << '/' << r.n_ambiguous << '/'
                << r.n_noisy << " w=" << r.mean_weight;
      if (r.val_mr) std::cerr << " val_mR=" << *r.val_mr;
      std::cerr << '\n';
    };
  }
  return o;
}

// Writes checkpoints, log, traces and report for one finished run.
json write_run(const fs::path& dir, const TrainResult& result, const LoadedData& data,
               const Hyper& h, Variant variant, bool timing) {
  write_checkpoint(result.heads, dir / "checkpoint.rrsp");
  write_checkpoint(result.final_heads, dir / "final.rrsp");
  write_train_log(result.log, dir / "train_log.jsonl", timing);
  json traces = json::array();
  for (const auto& [epoch, rows] : result.log.traces) {
    const fs::path p = dir / ("weights_epoch_" + std::to_string(epoch) + ".csv");
    write_weight_trace_csv(rows, epoch, p);
    traces.push_back(p.filename().string());
  }
  json report{{"variant", std::string(to_string(variant))},
              {"tag", std::string(variant_tag(variant))},
              {"best_epoch", result.log.best_epoch},
              {"initial_L_overall", result.log.initial_overall},
              {"weight_traces", traces},
              {"manifest", "manifest.json"}};
  if (!result.log.epochs.empty()) {
    report["final_L_overall"] = result.log.epochs.back().overall;
  }
  if (!result.log.traces.empty()) {
    report["detection"] = detection_metrics(result.log.traces.rbegin()->second);
    report["detection_epoch"] = result.log.traces.rbegin()->first;
  }
  if (data.test) {
    report["test"] = evaluate(result.heads, *data.test, h, variant_uses_local(variant));
  }
  write_json(report, dir / "report.json");
  return report;
}

int run_train(const TrainArgs& a, const std::string& cmd) {
  const Hyper h = a.hyper.resolve();
  const Variant variant = parse_variant(a.variant);
  const LoadedData data = load_data(a);
  const fs::path dir = a.out_dir;
  ensure_dir(dir);
  write_json(run_manifest(cmd, a, h,
                          {"checkpoint.rrsp", "final.rrsp", "train_log.jsonl", "report.json"}),
             dir / "manifest.json");
  const TrainResult result =
      ablate(data.train, h, variant, make_options(a, data, variant, std::string(to_string(variant))));
  const json report = write_run(dir, result, data, h, variant, a.timing);
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

struct AblateArgs {
  TrainArgs base;
  std::vector<std::string> variants;
  bool all = false;
};

int run_ablate(AblateArgs a, const std::string& cmd) {
  std::vector<Variant> variants;
  if (a.all) {
    variants = all_variants();
  } else {
    if (a.variants.empty()) throw ConfigError("ablate needs --variant or --all");
    for (const auto& v : a.variants) variants.push_back(parse_variant(v));
  }
  const Hyper h = a.base.hyper.resolve();
  const LoadedData data = load_data(a.base);
  if (!data.test) throw ConfigError("ablate needs --test to fill the results table");
  const fs::path dir = a.base.out_dir;
  ensure_dir(dir);
  json outputs = json::array({"results.csv"});
  for (Variant v : variants) outputs.push_back(std::string(to_string(v)) + "/");
  a.base.variant = a.all ? "all" : "";
  for (std::size_t i = 0; !a.all && i < a.variants.size(); ++i) {
    a.base.variant += (i ? "," : "") + a.variants[i];
  }
  write_json(run_manifest(cmd, a.base, h, outputs), dir / "manifest.json");

  std::ofstream csv(dir / "results.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write results.csv");
  csv << "tag," << retrieval_csv_header() << ",best_epoch\n";
  for (Variant v : variants) {
    const fs::path sub = dir / std::string(to_string(v));
    ensure_dir(sub);
    write_json(json{{"parent", "../manifest.json"}, {"variant", std::string(to_string(v))}},
               sub / "manifest.json");
    const TrainResult result =
        ablate(data.train, h, v, make_options(a.base, data, v, std::string(to_string(v))));
    const json report = write_run(sub, result, data, h, v, a.base.timing);
    const RetrievalReport r = evaluate(result.heads, *data.test, h, variant_uses_local(v));
    csv << variant_tag(v) << ',' << retrieval_csv_row(std::string(to_string(v)), r) << ','
        << result.log.best_epoch << '\n';
    csv.flush();
    std::cout << variant_tag(v) << ' ' << to_string(v) << " mR=" << r.mr << '\n';
  }
  return kExitOk;
}

std::vector<std::size_t> parse_epoch_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v == 0) {
      throw ConfigError("--epochs expects a comma-separated list of epochs >= 1, got '" + text +
                        "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("--epochs list is empty");
  return out;
}

struct TraceArgs {
  TrainArgs base;
  std::string epochs = "1,50";
};

int run_trace(TraceArgs a, const std::string& cmd) {
  a.base.trace_epochs = parse_epoch_list(a.epochs);
  Hyper h = a.base.hyper.resolve();
  h.epochs = *std::max_element(a.base.trace_epochs.begin(), a.base.trace_epochs.end());
  const Variant variant = parse_variant(a.base.variant);
  const LoadedData data = load_data(a.base);
  const fs::path dir = a.base.out_dir;
  ensure_dir(dir);
  json outputs = json::array();
  for (auto e : a.base.trace_epochs) {
    outputs.push_back("weights_epoch_" + std::to_string(e) + ".csv");
  }
  write_json(run_manifest(cmd, a.base, h, outputs), dir / "manifest.json");
  TrainOptions o = make_options(a.base, data, variant, "trace");
  o.trace_last_epoch = false;
  const TrainResult result = ablate(data.train, h, variant, o);
  for (const auto& [epoch, rows] : result.log.traces) {
    const fs::path p = dir / ("weights_epoch_" + std::to_string(epoch) + ".csv");
    write_weight_trace_csv(rows, epoch, p);
    const DetectionReport r = detection_metrics(rows);
    std::cout << p.string() << " rows=" << rows.size() << " noisy_f1=" << r.f1
              << " mean_w(y=1)=" << r.mean_weight_y1 << " mean_w(y=0)=" << r.mean_weight_y0
              << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string test;
  double alpha = Hyper{}.alpha;
  std::string local_aggregation = "frobenius";
  bool no_local = false;
  std::string out;
  std::string csv;
  std::string label = "eval";
};

int run_eval(const EvalArgs& a) {
  const Dataset test = read_dataset(a.test);
  if (test.n_noisy() != 0) {
    throw DataError("refusing to evaluate on '" + a.test + "': " +
                    std::to_string(test.n_noisy()) + " pairs carry y=0");
  }
  const ProjectionHeads heads = read_checkpoint(a.checkpoint);
  Hyper h;
  h.alpha = a.alpha;
  h.local_aggregation = parse_local_aggregation(a.local_aggregation);
  h.validate();
  const RetrievalReport r = evaluate(heads, test, h, !a.no_local);
  const json j{{"checkpoint", a.checkpoint},
               {"test", dataset_record(a.test)},
               {"alpha", a.no_local ? 1.0 : a.alpha},
               {"local_aggregation", a.local_aggregation},
               {"retrieval", r},
               {"git_describe", RRSITR_GIT_DESCRIBE}};
  if (!a.out.empty()) write_json(j, a.out);
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv) || fs::file_size(a.csv) == 0;
    std::ofstream csv(a.csv, std::ios::app);
    if (!csv) throw DataError("cannot open '" + a.csv + "'");
    if (fresh) csv << retrieval_csv_header() << '\n';
    csv << retrieval_csv_row(a.label, r) << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// similarity

struct SimilarityArgs {
  std::string data;
  std::string checkpoint;
  std::size_t rows = 0;
  std::string kind = "fused";
  double alpha = Hyper{}.alpha;
  std::string local_aggregation = "frobenius";
  std::string out;
};

int run_similarity(const SimilarityArgs& a) {
  const Dataset d = read_dataset(a.data);
  const std::size_t n = a.rows == 0 ? d.n_pairs() : std::min(a.rows, d.n_pairs());
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const ProjectionHeads heads = a.checkpoint.empty()
                                    ? ProjectionHeads::init(d.dim, d.dim, 0.0, 0)
                                    : read_checkpoint(a.checkpoint);
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw ConfigError("--alpha must lie in [0, 1]");
  const auto sims = projected_similarities(forward(heads, gather_batch(d, rows)), a.alpha,
                                           parse_local_aggregation(a.local_aggregation));
  const Eigen::MatrixXd& m =
      a.kind == "global" ? sims.global : (a.kind == "local" ? sims.local : sims.fused);
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + a.out + "' for writing");
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
  std::cout << "wrote " << m.rows() << 'x' << m.cols() << ' ' << a.kind << " similarities to "
            << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

void add_data_options(CLI::App* app, TrainArgs& a, bool with_epochs = true) {
  app->add_option("--train", a.train, "training split (RRSE)")->required()->check(CLI::ExistingFile);
  app->add_option("--val", a.val, "clean validation split for checkpoint selection")
      ->check(CLI::ExistingFile);
  app->add_option("--test", a.test, "clean test split")->check(CLI::ExistingFile);
  app->add_option("--out-dir", a.out_dir, "output directory")->required();
  app->add_flag("--timing", a.timing, "include wall-clock seconds in the train log");
  app->add_flag("-q,--quiet", a.quiet, "no per-epoch progress on stderr");
  a.hyper.attach(app, with_epochs);
}

int main_impl(int argc, char** argv) {
  tune_allocator();
  const std::string cmd = joined_args(argc, argv);

  CLI::App app{"Noisy-correspondence robust cross-modal retrieval training on paired embeddings"};
  app.set_version_flag("--version", std::string("rrsitr ") + RRSITR_GIT_DESCRIBE);
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads,
                 "worker threads for the linear-algebra kernels (effective only in OpenMP builds; 1 gives bit-reproducible runs)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic paired-embedding dataset");
  gen_cmd->add_option("--n", gen.config.n_pairs, "training pairs")->capture_default_str();
  gen_cmd->add_option("--classes", gen.config.n_classes, "semantic classes")
      ->capture_default_str();
  gen_cmd->add_option("--dim", gen.config.dim, "embedding width [desk-scale default]")
      ->capture_default_str();
  gen_cmd->add_option("--d1", gen.config.d1, "local image features per pair")
      ->capture_default_str();
  gen_cmd->add_option("--d2", gen.config.d2, "local text features per pair")
      ->capture_default_str();
  gen_cmd->add_option("--spread", gen.config.intra_class_spread, "intra-class spread")
      ->capture_default_str();
  gen_cmd->add_option("--modality-noise", gen.config.modality_noise,
                      "per-modality jitter, negative = same as --spread")
      ->capture_default_str();
  gen_cmd->add_option("--nuisance-rank", gen.config.nuisance_rank,
                      "rank of the per-modality nuisance subspace")
      ->capture_default_str();
  gen_cmd->add_option("--nuisance-scale", gen.config.nuisance_scale,
                      "scale of the nuisance component")
      ->capture_default_str();
  gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("-o,--out", gen.out, "output RRSE file")->required();
  gen_cmd->add_option("--val-n", gen.val_n, "extra pairs for a validation split");
  gen_cmd->add_option("--val-out", gen.val_out, "validation split output");
  gen_cmd->add_option("--test-n", gen.test_n, "extra pairs for a test split");
  gen_cmd->add_option("--test-out", gen.test_out, "test split output");

  InjectArgs inject;
  auto* inject_cmd = app.add_subcommand("inject", "shuffle the texts of a fraction of pairs");
  inject_cmd->add_option("--in", inject.in, "clean input RRSE")->required()->check(CLI::ExistingFile);
  inject_cmd->add_option("--rho", inject.rho, "noise rate in [0, 1]")->required();
  inject.seed_opt = inject_cmd->add_option("--seed", inject.seed, "noise seed");
  inject_cmd->add_option("-o,--out", inject.out, "output RRSE file")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train projection heads");
  add_data_options(train_cmd, train);
  train_cmd->add_option("--variant", train.variant, "objective variant (full, #1..#8 or name)")
      ->capture_default_str();
  train_cmd->add_option("--trace-epochs", train.trace_epochs,
                        "epochs whose per-pair weights are written (last epoch always)")
      ->delimiter(',');

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "train variants and tabulate test retrieval");
  add_data_options(ablate_cmd, ablate_args.base);
  ablate_cmd->add_option("--variant", ablate_args.variants, "variant(s) to run")->delimiter(',');
  ablate_cmd->add_flag("--all", ablate_args.all, "run #1..#8 and full");

  TraceArgs trace;
  auto* trace_cmd = app.add_subcommand("trace", "train and export per-pair weight CSVs");
  add_data_options(trace_cmd, trace.base, false);
  trace_cmd->add_option("--epochs", trace.epochs,
                        "comma-separated epochs to export; training runs to the largest")
      ->capture_default_str();
  trace_cmd->add_option("--variant", trace.base.variant, "objective variant")
      ->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "retrieval metrics of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "RRSP checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", eval.test, "clean test split")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--alpha", eval.alpha, "fusion weight")->capture_default_str();
  eval_cmd->add_option("--local-aggregation", eval.local_aggregation, "frobenius or mean")
      ->check(CLI::IsMember({"frobenius", "mean"}))
      ->capture_default_str();
  eval_cmd->add_flag("--no-local", eval.no_local, "rank by global similarity only");
  eval_cmd->add_option("-o,--out", eval.out, "JSON report path");
  eval_cmd->add_option("--csv", eval.csv, "append a results row to this CSV");
  eval_cmd->add_option("--label", eval.label, "row label for --csv")->capture_default_str();

  SimilarityArgs sim;
  auto* sim_cmd = app.add_subcommand("similarity", "dump a similarity matrix as CSV");
  sim_cmd->add_option("--data", sim.data, "RRSE dataset")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--checkpoint", sim.checkpoint, "RRSP checkpoint (default: identity heads)")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--rows", sim.rows, "first N pairs only, 0 = all")->capture_default_str();
  sim_cmd->add_option("--kind", sim.kind, "global, local or fused")
      ->check(CLI::IsMember({"global", "local", "fused"}))
      ->capture_default_str();
  sim_cmd->add_option("--alpha", sim.alpha, "fusion weight")->capture_default_str();
  sim_cmd->add_option("--local-aggregation", sim.local_aggregation, "frobenius or mean")
      ->check(CLI::IsMember({"frobenius", "mean"}))
      ->capture_default_str();
  sim_cmd->add_option("-o,--out", sim.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  Eigen::setNbThreads(threads);

  if (*gen_cmd) return run_gen(gen, cmd);
  if (*inject_cmd) return run_inject(inject, cmd);
  if (*train_cmd) return run_train(train, cmd);
  if (*ablate_cmd) return run_ablate(ablate_args, cmd);
  if (*trace_cmd) return run_trace(trace, cmd);
  if (*eval_cmd) return run_eval(eval);
  if (*sim_cmd) return run_similarity(sim);
  return kExitUsage;
}

}  // namespace
}  // namespace rrsitr

int main(int argc, char** argv) {
  try {
    return rrsitr::main_impl(argc, argv);
  } catch (const rrsitr::ConfigError& e) {
    std::cerr << "rrsitr: configuration error: " << e.what() << '\n';
    return rrsitr::kExitUsage;
  } catch (const rrsitr::FormatError& e) {
    std::cerr << "rrsitr: format error: " << e.what() << '\n';
    return rrsitr::kExitData;
  } catch (const rrsitr::DataError& e) {
    std::cerr << "rrsitr: data error: " << e.what() << '\n';
    return rrsitr::kExitData;
  } catch (const rrsitr::NumericError& e) {
    std::cerr << "rrsitr: numeric error: " << e.what() << '\n';
    return rrsitr::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "rrsitr: " << e.what() << '\n';
    return 1;
  }
}
