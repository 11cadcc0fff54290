#pragma once

// Subcommand front end. Every command reads one container, adds or replaces
// records, and writes a new container, so stages chain through files.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "motionadapter/motionadapter.hpp"
#include "motionadapter/records.hpp"

namespace motionadapter::cli {

struct Option {
  std::string key;
  std::string default_value;
  std::string help;
};

inline const std::vector<Option>& all_options() {
  static const std::vector<Option> options = {
      {"in", "", "input container"},
      {"out", "", "output container; for sweep a CSV path, stdout when empty"},
      {"threads", "1", "worker threads; results do not depend on it"},
      {"top_k", "3", "pixels averaged by hard extraction"},
      {"extraction", "hard", "hard | soft"},
      {"chain_mode", "mean", "mean (1/i) | verbatim (1/f)"},
      {"sigma", "1.5", "Gaussian smoothing sigma in pixels; 0 disables"},
      {"merge_mask", "target", "target | reference"},
      {"zoom", "1", "scale factor applied after customization"},
      {"total_steps", "50", "denoising steps T"},
      {"guidance_fraction", "0.2", "fraction of T that receives guidance"},
      {"optimize_steps", "1", "gradient updates per guided step"},
      {"step_size", "1", "gradient descent step size"},
      {"trace", "", "loss trace CSV path (stdout when empty)"},
      {"fixture", "flow", "flow | sweep | permutation"},
      {"flow_kind", "constant", "constant | rotation | zoom | random"},
      {"frames", "3", "frames f"},
      {"height", "4", "grid height h"},
      {"width", "4", "grid width w"},
      {"du", "1", "constant flow u per frame"},
      {"dv", "0", "constant flow v per frame"},
      {"omega", "0", "rotation per frame, radians"},
      {"rate", "1", "zoom factor per frame"},
      {"bound", "1", "random flow component bound"},
      {"seed", "0", "random seed"},
      {"attention", "onehot", "onehot | soft"},
      {"beta", "50", "sharpness of soft attention"},
      {"depth", "8", "feature depth of the permutation fixture"},
      {"sweep_timesteps", "5,25,45", "timesteps of the sweep fixture"},
      {"sweep_blocks", "6,18,30", "blocks of the sweep fixture"},
      {"clean_timestep", "5", "noise-free sweep cell timestep"},
      {"clean_block", "18", "noise-free sweep cell block"},
      {"noise", "1", "uniform noise amplitude for the other sweep cells"},
  };
  return options;
}

inline const Option* find_option(const std::string& key) {
  for (const auto& o : all_options())
    if (o.key == key) return &o;
  return nullptr;
}

/// Flat key=value settings; '#' starts a comment line.
class RunConfig {
 public:
  RunConfig() {
    for (const auto& o : all_options()) values_[o.key] = o.default_value;
  }

  void set(const std::string& key, const std::string& value) {
    if (!find_option(key)) throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
    values_[key] = value;
  }

  void load(std::istream& is, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto text = trim(line);
      if (text.empty() || text.front() == '#') continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::InvalidArgument, origin + ":" + std::to_string(lineno) + ": expected key=value");
      set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    }
  }

  void load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
    load(is, path.string());
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double number(const std::string& key) const {
    const auto& s = str(key);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "'" + key + "' is not a number: '" + s + "'");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t min = 0) const {
    const double v = number(key);
    if (v != std::floor(v) || v < static_cast<double>(min) || v > 1e15)
      throw Error(ErrorKind::InvalidArgument, "'" + key + "' must be an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto v = records::detail::parse_index(trim(item));
      if (!v || *v > 1000000) throw Error(ErrorKind::InvalidArgument, "'" + key + "' must list non-negative integers");
      out.push_back(static_cast<int>(*v));
    }
    if (out.empty()) throw Error(ErrorKind::InvalidArgument, "'" + key + "' is empty");
    return out;
  }

  std::string choice(const std::string& key, std::initializer_list<const char*> allowed) const {
    const auto& s = str(key);
    for (const char* a : allowed)
      if (s == a) return s;
    throw Error(ErrorKind::InvalidArgument, "'" + key + "' has unsupported value '" + s + "'");
  }

  ExtractionConfig extraction() const {
    return {count("top_k", 1),
            choice("extraction", {"hard", "soft"}) == "hard" ? ExtractionMode::Hard : ExtractionMode::Soft,
            threads()};
  }
  ChainMode chain_mode() const {
    return choice("chain_mode", {"mean", "verbatim"}) == "mean" ? ChainMode::MeanOverPaths
                                                                : ChainMode::VerbatimOneOverF;
  }
  CustomizeConfig customize() const {
    CustomizeConfig c;
    c.sigma = number("sigma");
    c.merge_mask_source = choice("merge_mask", {"target", "reference"}) == "target"
                              ? MergeMaskSource::Target
                              : MergeMaskSource::ReferenceVerbatim;
    return c;
  }
  GuidanceSchedule schedule() const {
    return {count("total_steps", 1), number("guidance_fraction"), count("optimize_steps", 1), number("step_size")};
  }
  unsigned threads() const { return static_cast<unsigned>(std::min<std::size_t>(count("threads", 1), 1024)); }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------

using Records = std::vector<TensorRecord>;

inline void put(Records& records, TensorRecord rec) {
  for (auto& r : records)
    if (r.name == rec.name) {
      r = std::move(rec);
      return;
    }
  records.push_back(std::move(rec));
}

inline std::filesystem::path require_path(const RunConfig& cfg, const std::string& key) {
  if (cfg.str(key).empty()) throw Error(ErrorKind::InvalidArgument, "--" + key + " is required");
  return cfg.str(key);
}

inline Records read_input(const RunConfig& cfg) { return read_container(require_path(cfg, "in")); }

inline void write_output(const RunConfig& cfg, const Records& records) {
  write_container(require_path(cfg, "out"), records);
}

inline void check_mask_grid(const ForegroundMask& m, const GridShape& shape, const std::string& name) {
  if (m.height() != shape.height || m.width() != shape.width)
    throw Error(ErrorKind::ShapeMismatch, name + " grid differs from meta_shape");
}

/// Parses `attention/<t>_<b>` or `attention/<t>_<b>/<k>`.
inline std::optional<std::pair<int, int>> parse_sweep_name(std::string_view name) {
  constexpr std::string_view prefix = "attention/";
  if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
  auto rest = name.substr(prefix.size());
  if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
    if (!records::detail::parse_index(rest.substr(slash + 1))) return std::nullopt;
    rest = rest.substr(0, slash);
  }
  const auto us = rest.find('_');
  if (us == std::string_view::npos) return std::nullopt;
  const auto t = records::detail::parse_index(rest.substr(0, us)), b = records::detail::parse_index(rest.substr(us + 1));
  if (!t || !b) return std::nullopt;
  return std::pair{static_cast<int>(*t), static_cast<int>(*b)};
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto records = read_input(cfg);
  std::optional<GridShape> shape;
  if (const auto* m = find_record(records, records::kMetaShape)) shape = records::shape_from(*m);
  for (const auto& rec : records) {
    if (rec.name == records::kAttention || rec.name == records::kAttentionLogits ||
        parse_sweep_name(rec.name)) {
      if (!shape) throw Error(ErrorKind::MissingRecord, "'" + rec.name + "' needs meta_shape");
      if (rec.name == records::kAttentionLogits) {
        const auto m = records::matrix_from(rec);
        if (m.rows() != shape->tokens() || m.cols() != shape->tokens())
          throw Error(ErrorKind::ShapeMismatch, "attention_logits side does not equal f*h*w");
      } else {
        validate_attention(rec, *shape);
      }
    } else if (rec.name == records::kMaskRef || rec.name == records::kMaskTgt) {
      const auto mask = records::mask_from(rec);
      if (shape) check_mask_grid(mask, *shape, rec.name);
    } else if (rec.name == records::kFeaturesRef || rec.name == records::kFeaturesTgt) {
      records::features_from(rec);
    } else if (rec.name == records::kCorrespondence) {
      records::correspondence_from(rec, find_record(records, records::kCorrespondenceMethod));
    } else if (rec.name == records::kMotionAligned || rec.name == records::kMotionFinal ||
               rec.name == records::kFlowGt) {
      records::fields_from_stack(rec);
    } else if (records::parse_motion_pair_name(rec.name)) {
      records::field_from(rec);
    }
  }
  out << "ok " << records.size() << " records\n";
  for (const auto& rec : records) {
    out << "  " << rec.name << ' ' << dtype_name(rec.dtype) << " [";
    for (std::size_t k = 0; k < rec.shape.size(); ++k) out << (k ? "," : "") << rec.shape[k];
    out << "]\n";
  }
  return 0;
}

inline int cmd_extract(const RunConfig& cfg, std::ostream&, std::ostream& log) {
  auto records = read_input(cfg);
  const auto ecfg = cfg.extraction();
  const auto shape = records::shape_from(require_record(records, records::kMetaShape));
  const Matrix attention = validate_attention(require_record(records, records::kAttention), shape);
  const auto pairs = extract_all_pairs(attention, shape, ecfg);
  for (const auto& [key, field] : pairs) put(records, records::field_record(records::motion_pair_name(key.first, key.second), field));
  write_output(cfg, records);
  log << "extract: " << pairs.size() << " pair motions\n";
  return 0;
}

inline int cmd_chain(const RunConfig& cfg, std::ostream&, std::ostream& log) {
  auto records = read_input(cfg);
  const auto shape = records::shape_from(require_record(records, records::kMetaShape));
  PairMotions pairs;
  for (const auto& rec : records)
    if (const auto key = records::parse_motion_pair_name(rec.name)) {
      auto field = records::field_from(rec);
      field.set_frames(key->first, key->second);
      pairs.emplace(*key, std::move(field));
    }
  const auto aligned = align_to_first(pairs, shape, cfg.chain_mode());
  put(records, records::sequence_record(std::string(records::kMotionAligned), aligned));
  write_output(cfg, records);
  log << "chain: " << aligned.size() << " aligned frames\n";
  return 0;
}

inline int cmd_correspond(const RunConfig& cfg, std::ostream&, std::ostream& log) {
  auto records = read_input(cfg);
  const auto ref = records::features_from(require_record(records, records::kFeaturesRef));
  const auto tgt = records::features_from(require_record(records, records::kFeaturesTgt));
  const auto mask_ref = records::mask_from(require_record(records, records::kMaskRef));
  const auto mask_tgt = records::mask_from(require_record(records, records::kMaskTgt));
  const auto map = build_correspondence(tgt, ref, mask_tgt, mask_ref, cfg.threads());
  for (auto& rec : records::correspondence_records(map)) put(records, std::move(rec));
  write_output(cfg, records);
  const auto fallback = std::count_if(map.matches.begin(), map.matches.end(),
                                      [](const Match& m) { return m.method == MatchMethod::NnFallback; });
  log << "correspond: " << map.matches.size() << " matches, " << fallback << " nearest-neighbour\n";
  return 0;
}

inline int cmd_customize(const RunConfig& cfg, std::ostream&, std::ostream& log) {
  auto records = read_input(cfg);
  const auto ccfg = cfg.customize();
  const double zoom = cfg.number("zoom");
  const auto m_ref = records::sequence_from(require_record(records, records::kMotionAligned));
  const auto mask_ref = records::mask_from(require_record(records, records::kMaskRef));
  const auto mask_tgt = records::mask_from(require_record(records, records::kMaskTgt));
  const auto corr = records::correspondence_from(require_record(records, records::kCorrespondence),
                                                 find_record(records, records::kCorrespondenceMethod));
  auto result = customize_pipeline(m_ref, mask_ref, mask_tgt, corr, ccfg);
  if (zoom != 1.0) result = scale_motion(result, zoom);
  put(records, records::sequence_record(std::string(records::kMotionFinal), result));
  write_output(cfg, records);
  log << "customize: " << result.size() << " frames\n";
  return 0;
}

inline int cmd_guide(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  auto records = read_input(cfg);
  const auto schedule = cfg.schedule();
  const auto mode = cfg.chain_mode();
  const std::filesystem::path trace_path = cfg.str("trace");
  require_path(cfg, "out");
  const auto shape = records::shape_from(require_record(records, records::kMetaShape));
  const auto target = records::sequence_from(require_record(records, records::kMotionFinal));
  GuidanceParams params{Matrix(shape.tokens(), shape.tokens())};
  if (const auto* init = find_record(records, records::kAttentionLogits)) params.logits = records::matrix_from(*init);
  const ExtractionConfig ecfg{1, ExtractionMode::Soft, cfg.threads()};

  auto emit_trace = [&](const std::vector<double>& trace) {
    if (trace_path.empty()) {
      write_trace_csv(out, trace);
      return;
    }
    std::ofstream os(trace_path);
    if (!os) throw Error(ErrorKind::Io, "cannot write trace '" + trace_path.string() + "'");
    write_trace_csv(os, trace);
    if (!os) throw Error(ErrorKind::Io, "failed writing trace '" + trace_path.string() + "'");
  };

  OptimizeResult result;
  try {
    result = optimize(params, shape, target, schedule, ecfg, mode);
  } catch (const NumericFailure& e) {
    emit_trace(e.trace());
    throw;
  }
  emit_trace(result.trace);
  put(records, records::matrix_record(std::string(records::kAttentionLogits), result.params.logits));
  write_output(cfg, records);
  log << "guide: " << result.trace.size() << " updates, final loss " << result.final_loss << '\n';
  return 0;
}

inline FlowSpec flow_spec(const RunConfig& cfg) {
  FlowSpec spec;
  const auto kind = cfg.choice("flow_kind", {"constant", "rotation", "zoom", "random"});
  spec.kind = kind == "constant" ? FlowKind::Constant
              : kind == "rotation" ? FlowKind::Rotation
              : kind == "zoom"     ? FlowKind::Zoom
                                   : FlowKind::Random;
  spec.shape = GridShape(cfg.count("frames", 1), cfg.count("height", 1), cfg.count("width", 1));
  spec.constant = {cfg.number("du"), cfg.number("dv")};
  spec.omega = cfg.number("omega");
  spec.rate = cfg.number("rate");
  spec.bound = static_cast<int>(cfg.count("bound"));
  spec.seed = cfg.count("seed");
  return spec;
}

inline int cmd_synth(const RunConfig& cfg, std::ostream&, std::ostream& log) {
  const auto fixture = cfg.choice("fixture", {"flow", "sweep", "permutation"});
  require_path(cfg, "out");
  Records records;
  if (fixture == "flow" || fixture == "sweep") {
    const auto spec = flow_spec(cfg);
    const auto flows = generate_flow(spec);
    records.push_back(records::shape_record(spec.shape));
    if (spec.shape.frames > 1) records.push_back(records::flow_gt_record(flows.flows, spec.shape));
    const Matrix clean = cfg.choice("attention", {"onehot", "soft"}) == "onehot"
                             ? onehot_attention_from_flow(flows.flows, spec.shape)
                             : soft_attention_from_flow(flows.flows, spec.shape, cfg.number("beta"));
    if (fixture == "flow") {
      records.push_back(records::matrix_record(std::string(records::kAttention), clean));
    } else {
      const double noise = cfg.number("noise");
      if (!(noise > 0.0)) throw Error(ErrorKind::InvalidArgument, "noise must be positive");
      const int clean_t = static_cast<int>(cfg.count("clean_timestep"));
      const int clean_b = static_cast<int>(cfg.count("clean_block"));
      std::mt19937_64 rng(spec.seed + 1);
      std::uniform_real_distribution<double> dist(0.0, noise);
      for (int t : cfg.int_list("sweep_timesteps")) {
        for (int b : cfg.int_list("sweep_blocks")) {
          Matrix a = clean;
          if (t != clean_t || b != clean_b)
            for (double& x : a.data()) x += dist(rng);
          put(records, records::matrix_record("attention/" + std::to_string(t) + "_" + std::to_string(b), a));
        }
      }
    }
  } else {
    const GridShape shape(cfg.count("frames", 1), cfg.count("height", 1), cfg.count("width", 1));
    const std::size_t depth = cfg.count("depth", 2), hw = shape.pixels();
    const std::size_t n = std::min(2 * depth, std::max<std::size_t>(1, hw / 3));
    std::mt19937_64 rng(cfg.count("seed"));
    std::vector<std::size_t> order(hw);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    ForegroundMask mask_ref(shape.height, shape.width), mask_tgt(shape.height, shape.width);
    for (std::size_t k = 0; k < n; ++k) mask_ref.set(order[k], true);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < n; ++k) mask_tgt.set(order[k], true);
    auto ref_fg = mask_ref.foreground_indices();
    std::shuffle(ref_fg.begin(), ref_fg.end(), rng);
    const auto tgt_fg = mask_tgt.foreground_indices();
    std::vector<std::pair<std::size_t, std::size_t>> perm;
    for (std::size_t k = 0; k < n; ++k) perm.emplace_back(tgt_fg[k], ref_fg[k]);
    const auto fx = features_with_permutation(shape.height, shape.width, depth, perm, mask_tgt, mask_ref);
    MotionSequence motion(shape.frames, shape.height, shape.width);
    std::uniform_int_distribution<int> quarter(-8, 8);  // multiples of 1/4 survive float32 exactly
    for (std::size_t i = 1; i < shape.frames; ++i)
      for (auto& v : motion[i].vectors()) v = {quarter(rng) / 4.0, quarter(rng) / 4.0};
    records.push_back(records::shape_record(shape));
    records.push_back(records::features_record(std::string(records::kFeaturesRef), fx.ref));
    records.push_back(records::features_record(std::string(records::kFeaturesTgt), fx.tgt));
    records.push_back(records::mask_record(std::string(records::kMaskRef), mask_ref));
    records.push_back(records::mask_record(std::string(records::kMaskTgt), mask_tgt));
    records.push_back(records::sequence_record(std::string(records::kMotionAligned), motion));
  }
  write_output(cfg, records);
  log << "synth: " << fixture << " fixture, " << records.size() << " records\n";
  return 0;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto records = read_input(cfg);
  const auto ecfg = cfg.extraction();
  const auto shape = records::shape_from(require_record(records, records::kMetaShape));
  const auto gt = records::flow_gt_from(require_record(records, records::kFlowGt));
  std::vector<SweepSample> samples;
  for (const auto& rec : records)
    if (const auto tb = parse_sweep_name(rec.name))
      samples.push_back({tb->first, tb->second, validate_attention(rec, shape)});
  const auto result = sweep_selection(samples, gt, shape, ecfg);
  if (cfg.str("out").empty()) {
    write_sweep_csv(out, result);
  } else {
    const std::filesystem::path path = cfg.str("out");
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    write_sweep_csv(os, result);
    if (!os) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
  }
  log << "sweep: " << samples.size() << " samples, argmin t=" << result.best_timestep << " b=" << result.best_block
      << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* description;
  std::vector<std::string> keys;  // module keys beyond the common ones
  int (*run)(const RunConfig&, std::ostream&, std::ostream&);
};

inline const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"validate", "check a container and list its records", {}, cmd_validate},
      {"extract", "attention -> motion_pair/<i>_<j>", {"top_k", "extraction"}, cmd_extract},
      {"chain", "motion_pair/* -> motion_aligned", {"chain_mode"}, cmd_chain},
      {"correspond", "features and masks -> correspondence", {}, cmd_correspond},
      {"customize", "motion_aligned + correspondence -> motion_final", {"sigma", "merge_mask", "zoom"}, cmd_customize},
      {"guide",
       "optimize attention_logits toward motion_final",
       {"chain_mode", "total_steps", "guidance_fraction", "optimize_steps", "step_size", "trace"},
       cmd_guide},
      {"synth",
       "write an oracle fixture container",
       {"fixture", "flow_kind", "frames", "height", "width", "du", "dv", "omega", "rate", "bound", "seed", "attention",
        "beta", "depth", "sweep_timesteps", "sweep_blocks", "clean_timestep", "clean_block", "noise"},
       cmd_synth},
      {"sweep", "per-(t,b) extraction error against flow_gt as CSV", {"top_k", "extraction"}, cmd_sweep},
  };
  return list;
}

inline std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// Entry point shared by the binary and the tests. args excludes argv[0].
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"motion field extraction, alignment, customization and guidance on tensor containers",
               "motionadapter_cli"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  struct Bound {
    std::string config_path;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
  };
  std::map<std::string, Bound> bound;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.description);
    auto& b = bound[cmd.name];
    sub->add_option("--config", b.config_path, "key=value config file; flags override it");
    std::vector<std::string> keys = {"in", "out", "threads"};
    keys.insert(keys.end(), cmd.keys.begin(), cmd.keys.end());
    for (const auto& key : keys) {
      const auto* opt = find_option(key);
      b.options[key] = sub->add_option(flag_name(key), b.flags[key], opt->help)->default_str(opt->default_value);
    }
    subs.emplace_back(sub, &cmd);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    const auto& b = bound.at(cmd->name);
    try {
      RunConfig cfg;
      if (!b.config_path.empty()) cfg.load_file(b.config_path);
      for (const auto& [key, option] : b.options)
        if (option->count() > 0) cfg.set(key, b.flags.at(key));
      return cmd->run(cfg, out, err);
    } catch (const Error& e) {
      err << cmd->name << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
      return exit_code(e.kind());
    } catch (const std::bad_alloc&) {
      err << cmd->name << ": out of memory\n";
      return 3;
    } catch (const std::exception& e) {
      err << cmd->name << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}

}  // namespace motionadapter::cli
