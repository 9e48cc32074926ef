// keyframe: command-line front end for caption enrichment, frame sampling,
// token layout, evaluation, benchmarking and plotting.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 text-generation client failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "keyframe/caption.hpp"
#include "keyframe/errors.hpp"
#include "keyframe/eval.hpp"
#include "keyframe/layout.hpp"
#include "keyframe/sampler.hpp"
#include "keyframe/score_model.hpp"
#include "keyframe/text_io.hpp"

namespace fs = std::filesystem;
using namespace keyframe;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kClient = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_sampling_options(CLI::App* cmd, SamplingConfig& cfg) {
  cmd->add_option("--alpha", cfg.alpha, "Candidate cap multiplier")
      ->capture_default_str();
  cmd->add_option("--max-frames", cfg.max_frames, "Frame budget")
      ->capture_default_str();
  cmd->add_option("--delta0", cfg.delta0_s,
                  "Initial minimum separation in seconds")
      ->capture_default_str();
  cmd->add_option("--lambda", cfg.decay_lambda, "Separation decay ratio")
      ->capture_default_str();
  cmd->add_option("--delta-floor", cfg.delta_floor_s,
                  "Separation below which the final unconstrained pass runs")
      ->capture_default_str();
}

// Moves "--config FILE" ahead of the subcommand so it may be written
// anywhere on the command line.
std::vector<std::string> hoist_config(int argc, char** argv) {
  std::vector<std::string> front, rest;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      front.push_back(arg);
      front.push_back(argv[++i]);
    } else if (arg.rfind("--config=", 0) == 0) {
      front.push_back(arg);
    } else {
      rest.push_back(arg);
    }
  }
  front.insert(front.end(), rest.begin(), rest.end());
  return front;
}

std::string join_times(const std::vector<double>& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i > 0) out += ", ";
    out += text_io::format_real(ts[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// caption

struct CaptionArgs {
  std::string question;
  std::vector<std::string> options;
  std::string mock;
  HttpClientConfig http;
  bool dump_prompt = false;
  std::string out;
};

int run_caption(const CaptionArgs& args) {
  Question q{args.question, args.options};
  if (args.dump_prompt) std::cout << render_prompt(q) << "\n";

  std::unique_ptr<TextGenClient> client;
  if (!args.mock.empty()) {
    client = std::make_unique<MockTextGenClient>(
        MockTextGenClient::from_file(args.mock));
  } else if (!args.http.endpoint_url.empty()) {
    client = std::make_unique<HttpTextGenClient>(args.http);
  } else if (args.dump_prompt) {
    return kOk;
  } else {
    throw UsageError("caption needs --mock or --endpoint");
  }

  auto caption = enrich(q, *client);
  if (caption.warning) std::cerr << "warning: " << *caption.warning << "\n";
  if (!args.out.empty()) {
    std::string body = "#schema_version\t1\n#kind\tcaption\n";
    body += "#generator_id\t" + text_io::escape(caption.generator_id) + "\n";
    body += "#word_count\t" + std::to_string(caption.word_count) + "\n";
    body += "question\tcaption\n";
    body += text_io::escape(caption.source_question) + "\t" +
            text_io::escape(caption.text) + "\n";
    text_io::write_file_atomic(fs::path(args.out) / "caption.tsv", body);
  }
  std::cout << caption.text << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string scores;
  std::string embeddings;
  std::string strategy = "tass";
  SamplingConfig cfg;
  std::int64_t n = 0;
  double duration = 0.0;
  std::string out = "keyframe_out";
};

int run_sample(const SampleArgs& args) {
  validate(args.cfg);
  auto strategy = parse_strategy(args.strategy);

  std::optional<ScoreSeries> series;
  bool derived_scores = false;
  if (!args.scores.empty()) {
    series = load_score_series(args.scores);
  } else if (!args.embeddings.empty()) {
    auto set = load_embedding_set(args.embeddings);
    if (!set.caption_embedding) {
      throw ValidationError(args.embeddings + ": no caption_embedding header");
    }
    series = build_score_series(set.frames, *set.caption_embedding, set.meta);
    derived_scores = true;
  }

  const std::int64_t n = args.n > 0 ? args.n : args.cfg.max_frames;
  SelectionReport report;
  switch (strategy) {
    case Strategy::tass: {
      if (!series) throw UsageError("tass needs --scores or --embeddings");
      auto pool = candidate_pool(*series, args.cfg);
      auto result = tass_select(pool, args.cfg);
      report = make_tass_report(pool, result, args.cfg);
      break;
    }
    case Strategy::uniform: {
      double duration = args.duration;
      if (duration <= 0.0) {
        if (!series || series->records.empty()) {
          throw UsageError("uniform needs --duration or a scores file");
        }
        duration = series->records.back().timestamp_s +
                   1.0 / series->extraction_fps;
      }
      report = make_uniform_report(uniform_select(duration, n));
      break;
    }
    case Strategy::topk:
      if (!series) throw UsageError("topk needs --scores or --embeddings");
      report = make_topk_report(*series, n);
      break;
  }

  auto text = format_selection_report(report);
  if (derived_scores) {
    save_score_series(*series, fs::path(args.out) / "scores.tsv");
  }
  text_io::write_file_atomic(fs::path(args.out) / "selection.tsv", text);

  std::vector<double> times;
  for (const auto& row : report.rows) times.push_back(row.timestamp_s);
  std::sort(times.begin(), times.end());
  std::cout << "strategy: " << report.strategy << "\n";
  if (report.s_mean) {
    std::cout << "s_mean: " << text_io::format_real(*report.s_mean) << "\n";
    std::cout << "pool_size: " << *report.pool_size
              << (*report.fallback_used ? " (fallback)" : "") << "\n";
    std::cout << "passes_run: " << *report.passes_run << "\n";
    std::cout << "exhausted: " << (*report.exhausted ? "true" : "false")
              << "\n";
  }
  std::cout << "picks: " << times.size() << "\n";
  std::cout << "timestamps: [" << join_times(times) << "]\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// layout

struct LayoutArgs {
  std::string selection;
  std::string frames;
  std::vector<double> timestamps;
  std::int64_t grid_h = 2;
  std::int64_t grid_w = 2;
  std::int64_t merge = 2;
  std::string style = "mm_ss";
  std::int64_t prompt_tokens = 0;
  bool compare_qwen = false;
  double qwen_scale = 1.0;
  std::string out = "keyframe_out";
};

std::vector<LayoutFrame> load_frame_list(const fs::path& path) {
  const auto source = path.string();
  auto table = text_io::parse_table(text_io::read_file(path), source);
  if (table.columns != std::vector<std::string>{"frame_index", "timestamp_s"}) {
    throw ParseError(source, table.columns_line, "columns",
                     "expected frame_index and timestamp_s columns");
  }
  std::vector<LayoutFrame> frames;
  for (const auto& row : table.rows) {
    if (row.cells.size() != 2) {
      throw ParseError(source, row.line, "row", "expected 2 fields");
    }
    frames.push_back(
        {text_io::parse_int(row.cells[0], source, row.line, "frame_index"),
         text_io::parse_real(row.cells[1], source, row.line, "timestamp_s")});
  }
  return frames;
}

int run_layout(const LayoutArgs& args) {
  std::vector<LayoutFrame> frames;
  if (!args.selection.empty()) {
    auto report = load_selection_report(args.selection);
    for (const auto& row : report.rows) {
      frames.push_back({row.frame_index.value_or(row.order - 1),
                        row.timestamp_s});
    }
    std::sort(frames.begin(), frames.end(),
              [](const LayoutFrame& a, const LayoutFrame& b) {
                return a.timestamp_s < b.timestamp_s;
              });
  } else if (!args.frames.empty()) {
    frames = load_frame_list(args.frames);
  } else if (!args.timestamps.empty()) {
    for (std::size_t i = 0; i < args.timestamps.size(); ++i) {
      frames.push_back({static_cast<std::int64_t>(i), args.timestamps[i]});
    }
  } else {
    throw UsageError("layout needs --selection, --frames or --timestamps");
  }

  LayoutOptions options;
  options.grid_h = args.grid_h;
  options.grid_w = args.grid_w;
  options.merge_factor = args.merge;
  options.style = parse_style(args.style);
  options.prompt_token_count = args.prompt_tokens;
  auto layout = build_layout(frames, options);
  auto dump = format_layout_dump(layout);

  std::optional<std::string> qwen_dump;
  std::int64_t qwen_max_t = 0;
  if (args.compare_qwen) {
    std::vector<double> times;
    for (const auto& f : frames) times.push_back(f.timestamp_s);
    auto positions =
        qwen_absolute_positions(times, args.grid_h, args.grid_w, args.qwen_scale);
    for (const auto& p : positions) qwen_max_t = std::max(qwen_max_t, p.t);
    qwen_dump = format_positions_dump(positions, args.grid_h * args.grid_w);
  }

  text_io::write_file_atomic(fs::path(args.out) / "layout.tsv", dump);
  if (qwen_dump) {
    text_io::write_file_atomic(fs::path(args.out) / "qwen_positions.tsv",
                               *qwen_dump);
  }

  std::int64_t time_tokens = 0;
  std::int64_t blocks = 0;
  for (const auto& e : layout.elements) {
    if (e.kind == ElementKind::time_text) time_tokens += e.token_count;
    if (e.kind == ElementKind::vision_block) ++blocks;
  }
  std::int64_t max_t = 0;
  for (const auto& p : layout.positions) max_t = std::max(max_t, p.t);
  std::cout << "vision_blocks: " << blocks << "\n";
  std::cout << "time_tokens: " << time_tokens << "\n";
  std::cout << "tokens: " << layout.positions.size() << "\n";
  std::cout << "max_t: " << max_t << "\n";
  for (const auto& e : layout.elements) {
    if (e.timestamp) std::cout << "stamp: " << e.timestamp->text << "\n";
  }
  if (args.compare_qwen) std::cout << "absolute_max_t: " << qwen_max_t << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string spec;
  std::vector<std::string> strategies = {"tass", "uniform"};
  std::int64_t seeds = 1;
  SamplingConfig cfg;
  double tolerance = 0.0;
  unsigned threads = 0;
  std::string sweep_axis;
  std::vector<double> sweep_values;
  std::string out = "keyframe_out";
};

int run_eval(const EvalArgs& args) {
  validate(args.cfg);
  SyntheticEventSpec spec;
  if (!args.spec.empty()) spec = load_event_spec(args.spec);
  validate(spec);
  const double tolerance =
      args.tolerance > 0.0 ? args.tolerance : spec.event_width_s;

  std::vector<Strategy> strategies;
  for (const auto& s : args.strategies) strategies.push_back(parse_strategy(s));
  unsigned threads = args.threads > 0 ? args.threads
                                      : std::max(1u, std::thread::hardware_concurrency());

  std::optional<std::vector<SweepRow>> sweep_rows;
  std::optional<SweepAxis> axis;
  if (!args.sweep_axis.empty()) {
    if (args.sweep_values.empty()) throw UsageError("--sweep needs --values");
    axis = parse_sweep_axis(args.sweep_axis);
    auto data = synth_series(spec);
    sweep_rows = sweep(data, spec.duration_s, *axis, args.sweep_values, args.cfg,
                       tolerance);
  }

  auto rows = evaluate_seeds(spec, strategies, args.seeds, args.cfg, tolerance,
                             threads);

  std::string summary = "#schema_version\t1\n#kind\teval_summary\n";
  summary += "#seeds\t" + std::to_string(args.seeds) + "\n";
  summary += "#tolerance_s\t" + text_io::format_real(tolerance) + "\n";
  summary += "strategy\tmedian_recall\tmean_recall\tmedian_span_coverage\n";
  std::vector<std::string> lines;
  for (auto s : strategies) {
    std::vector<double> recall, span;
    for (const auto& r : rows) {
      if (r.strategy != s) continue;
      recall.push_back(r.report.recall);
      span.push_back(r.report.span_coverage);
    }
    double mean = 0.0;
    for (double v : recall) mean += v;
    mean /= static_cast<double>(recall.size());
    auto line = std::string(strategy_name(s)) + "\t" +
                text_io::format_real(median(recall)) + "\t" +
                text_io::format_real(mean) + "\t" +
                text_io::format_real(median(span));
    summary += line + "\n";
    lines.push_back(line);
  }

  text_io::write_file_atomic(fs::path(args.out) / "eval.tsv",
                             format_seed_table(rows));
  text_io::write_file_atomic(fs::path(args.out) / "summary.tsv", summary);
  if (sweep_rows) {
    text_io::write_file_atomic(fs::path(args.out) / "sweep.tsv",
                               format_sweep_table(*axis, *sweep_rows));
  }

  std::cout << "strategy\tmedian_recall\tmean_recall\tmedian_span_coverage\n";
  for (const auto& l : lines) std::cout << l << "\n";
  if (sweep_rows) {
    std::cout << sweep_axis_name(*axis) << "\trecall\n";
    for (const auto& r : *sweep_rows) {
      std::cout << text_io::format_real(r.value) << "\t"
                << text_io::format_real(r.report.recall) << "\n";
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string strategy = "tass";
  std::vector<std::int64_t> pool_sizes = {64, 256, 1024};
  std::int64_t max_frames = 256;
  int repetitions = 7;
  std::uint64_t seed = 7;
  std::string out = "keyframe_out";
};

int run_bench(const BenchArgs& args) {
  auto strategy = parse_strategy(args.strategy);
  auto rows = bench_sampler(strategy, args.pool_sizes, args.max_frames,
                            args.repetitions, args.seed);
  auto table = format_bench_table(strategy, args.max_frames, rows);
  text_io::write_file_atomic(fs::path(args.out) / "bench.tsv", table);
  std::cout << "pool_size\tmedian_ns\n";
  for (const auto& r : rows) {
    std::cout << r.pool_size << "\t" << r.median_ns << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::string scores;
  std::string selection;
  std::string out = "keyframe_out";
};

int run_plot(const PlotArgs& args) {
  auto series = load_score_series(args.scores);
  auto report = load_selection_report(args.selection);
  auto bundle = emit_plot_data(series, report, args.out);
  std::cout << bundle.curve.string() << "\n"
            << bundle.picks.string() << "\n"
            << bundle.svg.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-guided keyframe sampling and timestamped token layout",
               "keyframe"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "",
                 "TOML/INI defaults; one [section] per subcommand, keys are "
                 "long option names");

  CaptionArgs caption_args;
  auto* caption = app.add_subcommand("caption", "Rewrite a question as a caption");
  caption->add_option("--question", caption_args.question, "Question text")
      ->required();
  caption->add_option("--options", caption_args.options,
                      "Multiple-choice answers");
  caption->add_option("--mock", caption_args.mock,
                      "Fixture table for the offline client")
      ->check(CLI::ExistingFile);
  caption->add_option("--endpoint", caption_args.http.endpoint_url,
                      "Chat-completions URL for the live client");
  caption->add_option("--model", caption_args.http.model, "Model name");
  caption->add_option("--token-env", caption_args.http.token_env,
                      "Environment variable with the bearer token")
      ->capture_default_str();
  caption->add_option("--timeout", caption_args.http.timeout_s,
                      "Request timeout in seconds")
      ->capture_default_str();
  caption->add_option("--retries", caption_args.http.retries,
                      "Extra attempts after a failure (0 or 1)")
      ->check(CLI::Range(0, 1))
      ->capture_default_str();
  caption->add_flag("--dump-prompt", caption_args.dump_prompt,
                    "Print the rendered prompt");
  caption->add_option("--out", caption_args.out,
                      "Also write caption.tsv into this directory");
  caption->get_option("--mock")->excludes(caption->get_option("--endpoint"));

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Select frames from a score file");
  auto* scores_opt =
      sample->add_option("--scores", sample_args.scores, "Score file")
          ->check(CLI::ExistingFile);
  auto* emb_opt = sample->add_option("--embeddings", sample_args.embeddings,
                                     "Embeddings file with caption embedding")
                      ->check(CLI::ExistingFile);
  scores_opt->excludes(emb_opt);
  sample->add_option("--strategy", sample_args.strategy)
      ->check(CLI::IsMember({"tass", "uniform", "topk"}))
      ->capture_default_str();
  add_sampling_options(sample, sample_args.cfg);
  sample->add_option("--n", sample_args.n,
                     "Picks for uniform/topk (default: --max-frames)");
  sample->add_option("--duration", sample_args.duration,
                     "Video duration in seconds for uniform sampling");
  sample->add_option("--out", sample_args.out, "Output directory")
      ->capture_default_str();

  LayoutArgs layout_args;
  auto* layout = app.add_subcommand("layout", "Emit the interleaved token layout");
  auto* sel_opt = layout->add_option("--selection", layout_args.selection,
                                     "Selection report")
                      ->check(CLI::ExistingFile);
  auto* frames_opt = layout->add_option("--frames", layout_args.frames,
                                        "Frame list (frame_index, timestamp_s)")
                         ->check(CLI::ExistingFile);
  auto* ts_opt = layout->add_option("--timestamps", layout_args.timestamps,
                                    "Frame timestamps in seconds")
                     ->delimiter(',');
  sel_opt->excludes(frames_opt)->excludes(ts_opt);
  frames_opt->excludes(ts_opt);
  layout->add_option("--grid-h", layout_args.grid_h)->capture_default_str();
  layout->add_option("--grid-w", layout_args.grid_w)->capture_default_str();
  layout->add_option("--merge", layout_args.merge, "Frames per vision block")
      ->capture_default_str();
  layout->add_option("--style", layout_args.style)
      ->check(CLI::IsMember({"mm_ss", "seconds", "hh_mm_ss"}))
      ->capture_default_str();
  layout->add_option("--prompt-tokens", layout_args.prompt_tokens)
      ->capture_default_str();
  layout->add_flag("--compare-qwen", layout_args.compare_qwen,
                   "Also emit absolute-time positions");
  layout->add_option("--qwen-scale", layout_args.qwen_scale,
                     "Temporal positions per second for the comparator")
      ->capture_default_str();
  layout->add_option("--out", layout_args.out)->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Recall on planted-event series");
  eval->add_option("--spec", eval_args.spec, "Synthetic event spec (JSON)")
      ->check(CLI::ExistingFile);
  eval->add_option("--strategies", eval_args.strategies)
      ->delimiter(',')
      ->check(CLI::IsMember({"tass", "uniform", "topk"}));
  eval->add_option("--seeds", eval_args.seeds, "Number of consecutive seeds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_sampling_options(eval, eval_args.cfg);
  eval->add_option("--tolerance", eval_args.tolerance,
                   "Recall tolerance in seconds (default: event width)");
  eval->add_option("--threads", eval_args.threads);
  auto* sweep_opt = eval->add_option("--sweep", eval_args.sweep_axis)
                        ->check(CLI::IsMember({"alpha", "delta0"}));
  eval->add_option("--values", eval_args.sweep_values)
      ->delimiter(',')
      ->needs(sweep_opt);
  eval->add_option("--out", eval_args.out)->capture_default_str();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time a sampler over pool sizes");
  bench->add_option("--strategy", bench_args.strategy)
      ->check(CLI::IsMember({"tass", "uniform", "topk"}))
      ->capture_default_str();
  bench->add_option("--pool-sizes", bench_args.pool_sizes)
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--max-frames", bench_args.max_frames)->capture_default_str();
  bench->add_option("--repetitions", bench_args.repetitions)
      ->check(CLI::Range(3, 1000000))
      ->capture_default_str();
  bench->add_option("--seed", bench_args.seed)->capture_default_str();
  bench->add_option("--out", bench_args.out)->capture_default_str();

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Write curve, picks and SVG files");
  plot->add_option("--scores", plot_args.scores)
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--selection", plot_args.selection)
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", plot_args.out)->capture_default_str();

  try {
    auto args = hoist_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*caption) return run_caption(caption_args);
    if (*sample) return run_sample(sample_args);
    if (*layout) return run_layout(layout_args);
    if (*eval) return run_eval(eval_args);
    if (*bench) return run_bench(bench_args);
    if (*plot) return run_plot(plot_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const GenerationError& e) {
    std::cerr << "client error: " << e.what() << "\n";
    return kClient;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
