#include "cli.hpp"

#include "memesent/balance.hpp"
#include "memesent/checkpoint.hpp"
#include "memesent/dataset.hpp"
#include "memesent/embeddings_io.hpp"
#include "memesent/evalmetrics.hpp"
#include "memesent/image_io.hpp"
#include "memesent/parallel.hpp"
#include "memesent/pipeline.hpp"
#include "memesent/textprep.hpp"
#include "memesent/train.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace memesent::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Scalar = float;

namespace {

// ---------------------------------------------------------------------------
// Shared option groups

struct Common {
  std::uint64_t seed = 0;
  int workers = 1;
  bool json = false;
};

struct DataArgs {
  std::string dataset, schema;
};

struct FeatureArgs {
  std::string corpus;
  std::string images;
  std::vector<std::string> embeddings;  // role=path
  bool toy = false;
  int d_model = 64, encoder_layers = 2, heads = 2, patch_size = 16, max_tokens = 32, caption_len = 16;
  int fusion_width = 0;  // 0: wider side
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool required = true) {
  auto* d = cmd->add_option("--dataset", a.dataset, "Annotation file (CSV or JSON lines)")->check(CLI::ExistingFile);
  auto* s = cmd->add_option("--schema", a.schema, "Schema / label-mapping JSON")->check(CLI::ExistingFile);
  if (required) {
    d->required();
    s->required();
  }
}

void add_common_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Run seed; every random stream derives from it");
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

void add_feature_options(CLI::App* cmd, FeatureArgs& f, bool encoder_shape) {
  cmd->add_option("--corpus", f.corpus, "Preprocessed corpus (JSON lines {id, tokens})")->check(CLI::ExistingFile);
  cmd->add_option("--images", f.images, "Directory of PPM/PGM images named by the image column")
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--embeddings", f.embeddings, "Imported embeddings as ROLE=FILE (image, tokens, sentence, caption)");
  if (!encoder_shape) return;
  cmd->add_flag("--toy-encoders", f.toy, "Encode with the built-in from-scratch encoders");
  cmd->add_option("--d-model", f.d_model, "Toy encoder width");
  cmd->add_option("--encoder-layers", f.encoder_layers, "Toy encoder transformer blocks");
  cmd->add_option("--heads", f.heads, "Toy encoder attention heads");
  cmd->add_option("--patch-size", f.patch_size, "Toy image patch size");
  cmd->add_option("--max-tokens", f.max_tokens, "Toy text encoder sequence limit");
  cmd->add_option("--caption-len", f.caption_len, "Toy caption length limit");
  cmd->add_option("--fusion-width", f.fusion_width, "Common width both fusion sides are projected to");
}

dataset::Schema load_schema(const std::string& path) { return dataset::Schema::from_file(path); }

std::vector<dataset::MemeRecord> load_records(const DataArgs& a) {
  return dataset::load_dataset(a.dataset, load_schema(a.schema));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::map<std::string, std::vector<std::string>> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus '" + path + "'");
  std::map<std::string, std::vector<std::string>> corpus;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      corpus[j.at("id").get<std::string>()] = j.at("tokens").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return corpus;
}

pipeline::EmbeddingSources load_embeddings(const std::vector<std::string>& specs) {
  static const std::set<std::string> kRoles = {"image", "tokens", "sentence", "caption"};
  pipeline::EmbeddingSources src;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InputError("--embeddings expects ROLE=FILE, got '" + s + "'");
    const std::string role = s.substr(0, eq);
    const std::string path = s.substr(eq + 1);
    if (!kRoles.contains(role)) throw InputError("unknown embedding role '" + role + "'");
    if (!fs::exists(path)) throw InputError("embedding file '" + path + "' does not exist");
    src[role] = encode::read_embeddings(path);
  }
  return src;
}

// ---------------------------------------------------------------------------
// Feature construction shared by train, eval and embed

/// Everything needed to rebuild a variant's fused sequences; persisted in
/// checkpoint metadata so evaluation reproduces training-time features.
struct FeaturePlan {
  VariantKind variant = VariantKind::imgsen;
  bool toy = true;
  pipeline::FeatureSettings settings;
  Eigen::Index sequence_rows = 0;
  double split_ratio = 0.8;

  std::map<std::string, std::string> to_metadata() const {
    const auto& s = settings.spec;
    return {{"encoder", toy ? "toy" : "external"},
            {"d_model", std::to_string(s.d_model)},
            {"encoder_layers", std::to_string(s.n_layers)},
            {"heads", std::to_string(s.n_heads)},
            {"patch_size", std::to_string(s.patch_size)},
            {"max_tokens", std::to_string(s.max_tokens)},
            {"encoder_seed", std::to_string(s.seed)},
            {"channels", std::to_string(settings.channels)},
            {"max_patches", std::to_string(settings.max_patches)},
            {"caption_len", std::to_string(settings.caption_len)},
            {"fusion_width", std::to_string(settings.fusion_width.value_or(0))},
            {"sequence_rows", std::to_string(sequence_rows)},
            {"split_ratio", fixed(split_ratio, 6)}};
  }

  static FeaturePlan from_metadata(VariantKind v, const std::map<std::string, std::string>& m) {
    const auto get = [&](const char* key) -> const std::string& {
      const auto it = m.find(key);
      if (it == m.end()) throw InputError(std::string("checkpoint metadata lacks '") + key + "'");
      return it->second;
    };
    const auto num = [&](const char* key) {
      try {
        return std::stoll(get(key));
      } catch (const std::logic_error&) {
        throw InputError(std::string("checkpoint metadata '") + key + "' is not a number");
      }
    };
    FeaturePlan p;
    p.variant = v;
    p.toy = get("encoder") == "toy";
    p.settings.variant = v;
    p.settings.spec.d_model = static_cast<int>(num("d_model"));
    p.settings.spec.n_layers = static_cast<int>(num("encoder_layers"));
    p.settings.spec.n_heads = static_cast<int>(num("heads"));
    p.settings.spec.patch_size = static_cast<int>(num("patch_size"));
    p.settings.spec.max_tokens = static_cast<int>(num("max_tokens"));
    p.settings.spec.seed = std::stoull(get("encoder_seed"));
    p.settings.channels = static_cast<int>(num("channels"));
    p.settings.max_patches = static_cast<int>(num("max_patches"));
    p.settings.caption_len = static_cast<int>(num("caption_len"));
    if (const auto w = num("fusion_width"); w > 0) p.settings.fusion_width = static_cast<int>(w);
    p.sequence_rows = static_cast<Eigen::Index>(num("sequence_rows"));
    p.split_ratio = std::stod(get("split_ratio"));
    return p;
  }
};

struct FeatureSource {
  FeaturePlan plan;
  std::optional<pipeline::ToyEncoders<Scalar>> toy;
  pipeline::EmbeddingSources external;
  std::map<std::string, std::vector<std::string>> corpus;
  std::string images_dir;
  fusion::WidthAlignment<Scalar> alignment;
};

std::optional<encode::Image<Scalar>> load_image(const FeatureSource& src, const dataset::MemeRecord& r) {
  const auto n = pipeline::needs(src.plan.variant);
  if (!n.image && !n.caption) return std::nullopt;
  const auto raw = read_pnm(fs::path(src.images_dir) / r.image_ref);
  if (raw.channels != src.plan.settings.channels) {
    throw InputError("image '" + r.image_ref + "' has " + std::to_string(raw.channels) + " channels, expected " +
                     std::to_string(src.plan.settings.channels));
  }
  return to_image<Scalar>(raw);
}

fusion::VariantInputs<Scalar> side_inputs(const FeatureSource& src, const dataset::MemeRecord& r) {
  if (!src.plan.toy) return pipeline::external_inputs<Scalar>(src.plan.variant, src.external, r.id);
  pipeline::MemeInput<Scalar> m;
  m.id = r.id;
  m.image = load_image(src, r);
  const auto n = pipeline::needs(src.plan.variant);
  if (n.tokens || n.sentence) {
    const auto it = src.corpus.find(r.id);
    if (it == src.corpus.end()) throw InputError("corpus has no tokens for record '" + r.id + "'");
    m.tokens = it->second;
  }
  return pipeline::toy_inputs(*src.toy, m);
}

/// Prepares a feature source. For toy encoders without a stored plan, the
/// image geometry is taken from the first record's image.
FeatureSource make_source(FeaturePlan plan, const FeatureArgs& args, const std::vector<dataset::MemeRecord>& sample,
                          bool plan_is_stored) {
  FeatureSource src;
  const auto n = pipeline::needs(plan.variant);
  if (plan.toy) {
    if (!args.embeddings.empty()) throw InputError("--embeddings and toy encoders are mutually exclusive");
    if ((n.tokens || n.sentence) && args.corpus.empty()) {
      throw InputError(std::string(variant_heading(plan.variant)) + " with toy encoders needs --corpus");
    }
    if ((n.image || n.caption) && args.images.empty()) {
      throw InputError(std::string(variant_heading(plan.variant)) + " with toy encoders needs --images");
    }
    if (!args.corpus.empty()) src.corpus = load_corpus(args.corpus);
    src.images_dir = args.images;
    if (!plan_is_stored && (n.image || n.caption) && !sample.empty()) {
      const auto raw = read_pnm(fs::path(args.images) / sample.front().image_ref);
      plan.settings.channels = raw.channels;
      const int p = plan.settings.spec.patch_size;
      if (raw.height % p != 0 || raw.width % p != 0) {
        throw InputError("image size " + std::to_string(raw.height) + "x" + std::to_string(raw.width) +
                         " is not divisible by patch size " + std::to_string(p));
      }
      plan.settings.max_patches = (raw.height / p) * (raw.width / p);
    }
    src.toy = pipeline::ToyEncoders<Scalar>::make(plan.settings);
    src.alignment = fusion::make_alignment<Scalar>(plan.variant, src.toy->widths(), plan.settings.fusion_width,
                                                   plan.settings.spec.seed);
  } else {
    src.external = load_embeddings(args.embeddings);
    src.alignment = fusion::make_alignment<Scalar>(plan.variant, pipeline::external_widths(plan.variant, src.external),
                                                   plan.settings.fusion_width, plan.settings.spec.seed);
  }
  src.plan = std::move(plan);
  return src;
}

std::vector<MatrixX<Scalar>> build_sequences(const FeatureSource& src, const std::vector<dataset::MemeRecord>& records,
                                             int workers) {
  std::vector<MatrixX<Scalar>> seqs(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    seqs[i] = fusion::assemble_variant_input(src.plan.variant, side_inputs(src, records[i]), src.alignment).values;
  });
  return seqs;
}

FeaturePlan plan_from_args(VariantKind v, const FeatureArgs& f, std::uint64_t seed) {
  FeaturePlan p;
  p.variant = v;
  p.toy = f.toy || f.embeddings.empty();
  p.settings.variant = v;
  p.settings.spec.d_model = f.d_model;
  p.settings.spec.n_layers = f.encoder_layers;
  p.settings.spec.n_heads = f.heads;
  p.settings.spec.patch_size = f.patch_size;
  p.settings.spec.max_tokens = f.max_tokens;
  p.settings.spec.seed = seed;
  p.settings.caption_len = f.caption_len;
  if (f.fusion_width > 0) p.settings.fusion_width = f.fusion_width;
  p.settings.spec.validate();
  return p;
}

model::TaskLabels labels_of(const dataset::MemeRecord& r, const std::array<bool, 4>& tasks) {
  model::TaskLabels y{};
  for (Task t : kAllTasks) {
    const auto i = static_cast<std::size_t>(t);
    y[i] = tasks[i] ? r.labels.index(t) : -1;
  }
  return y;
}

std::array<bool, 4> parse_tasks(const std::string& spec) {
  if (spec.empty() || spec == "all") return {true, true, true, true};
  std::array<bool, 4> tasks{};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) tasks[static_cast<std::size_t>(parse_task(item))] = true;
  return tasks;
}

// ---------------------------------------------------------------------------
// ingest

void cmd_ingest(const DataArgs& a, const Common& c, std::ostream& out) {
  const auto records = load_records(a);
  if (c.json) {
    json j;
    j["records"] = records.size();
    json summary = json::object();
    json dists = json::object();
    for (Task t : kAllTasks) {
      const auto s = dataset::summary_counts(records, t);
      summary[std::string(task_heading(t))] = {{"positive", s[0]}, {"negative", s[1]}, {"neutral", s[2]}};
      if (records.empty()) continue;
      json d = json::object();
      for (const auto& [name, count] : dataset::class_distribution(records, t).counts) d[name] = count;
      dists[std::string(task_name(t))] = d;
    }
    j["summary"] = summary;
    j["distributions"] = dists;
    out << j.dump(2) << '\n';
    return;
  }
  out << records.size() << " records\n";
  if (records.empty()) return;
  char line[128];
  std::snprintf(line, sizeof line, "\n%-20s%10s%10s%10s\n", "", "POSITIVE", "NEGATIVE", "NEUTRAL");
  out << line;
  for (Task t : kAllTasks) {
    const auto s = dataset::summary_counts(records, t);
    std::snprintf(line, sizeof line, "%-20s%10zu%10zu%10zu\n", std::string(task_heading(t)).c_str(), s[0], s[1], s[2]);
    out << line;
  }
  out << '\n';
  for (Task t : kAllTasks) {
    out << task_name(t) << ':';
    for (const auto& [name, count] : dataset::class_distribution(records, t).counts) out << ' ' << name << '=' << count;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  DataArgs data;
  std::string texts;  // JSON lines {id, text}
  std::string lexicon, vocab, out;
  std::string stemmer = "porter";
  bool no_filter = false;
};

void cmd_preprocess(const PreprocessArgs& a, const Common& c, std::ostream& stdout_) {
  if (a.data.dataset.empty() == a.texts.empty()) throw InputError("preprocess: give exactly one of --dataset or --texts");
  if (!a.data.dataset.empty() && a.data.schema.empty()) throw InputError("preprocess: --dataset needs --schema");
  textprep::PreprocessConfig cfg;
  cfg.emoji_lexicon = textprep::EmojiLexicon::from_file(a.lexicon);
  if (a.stemmer == "porter") {
    cfg.stemmer = textprep::Stemmer::porter;
  } else if (a.stemmer == "none") {
    cfg.stemmer = textprep::Stemmer::none;
    cfg.stages.stem = false;
  } else {
    throw InputError("unknown stemmer '" + a.stemmer + "'");
  }
  cfg.stages.vocabulary_filter = !a.no_filter;
  if (!a.no_filter) {
    if (a.vocab.empty()) throw InputError("preprocess: --vocab is required unless --no-filter is given");
    cfg.vocabulary = textprep::load_vocabulary(a.vocab);
  }
  const textprep::Preprocessor prep(cfg);

  std::vector<std::pair<std::string, std::string>> items;  // (id, raw text)
  if (!a.texts.empty()) {
    std::ifstream in(a.texts);
    if (!in) throw InputError("cannot open '" + a.texts + "'");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        items.emplace_back(j.at("id").get<std::string>(), j.at("text").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw InputError(a.texts + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  } else {
    for (auto& r : load_records(a.data)) items.emplace_back(r.id, r.text);
  }

  std::vector<std::string> lines(items.size());
  parallel_for(items.size(), c.workers, [&](std::size_t i) {
    const auto clean = prep(items[i].second);
    lines[i] = json{{"id", items[i].first}, {"tokens", clean.tokens}}.dump();
  });
  std::ofstream file;
  std::ostream* out = &stdout_;
  if (!a.out.empty()) {
    file = open_out(a.out);
    out = &file;
  }
  for (const auto& l : lines) *out << l << '\n';
}

// ---------------------------------------------------------------------------
// balance

struct BalanceArgs {
  std::string input, out;
  int k = 5;
};

void cmd_balance(const BalanceArgs& a, const Common& c, std::ostream& out) {
  std::ifstream in(a.input);
  if (!in) throw InputError("cannot open '" + a.input + "'");
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        if (first) {
          labels.push_back(std::stoi(cell, &used));
        } else {
          row.push_back(std::stod(cell, &used));
        }
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw InputError(a.input + ":" + std::to_string(n) + ": bad number '" + cell + "'");
      }
      first = false;
    }
    if (row.empty()) throw InputError(a.input + ":" + std::to_string(n) + ": expected label,f1,...,fd");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError(a.input + ":" + std::to_string(n) + ": row width differs from the first row");
    }
    rows.push_back(std::move(row));
  }
  balance::LabeledVectors<double> data;
  data.labels = labels;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 1 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  balance::SmoteOptions opt;
  opt.k = a.k;
  opt.seed = c.seed;
  const auto result = balance::balance_to_majority(data, opt);

  auto file = open_out(a.out);
  for (Eigen::Index i = 0; i < result.data.size(); ++i) {
    file << result.data.labels[static_cast<std::size_t>(i)];
    char buf[32];
    for (Eigen::Index j = 0; j < result.data.features.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", result.data.features(i, j));
      file << buf;
    }
    file << '\n';
  }
  const auto counts = balance::class_counts(result.data);
  if (c.json) {
    json j = {{"rows", result.data.size()}, {"synthetic", result.synthetic.size()}};
    json cj = json::object();
    for (const auto& [cls, count] : counts) cj[std::to_string(cls)] = count;
    j["counts"] = cj;
    out << j.dump(2) << '\n';
  } else {
    out << result.data.size() << " rows (" << result.synthetic.size() << " synthetic)\n";
    for (const auto& [cls, count] : counts) out << "class " << cls << ": " << count << '\n';
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  DataArgs data;
  FeatureArgs features;
  std::string variant, out, tasks;
  std::optional<int> epochs, batch_size;
  std::optional<double> lr;
  double split = 0.8;
  int k = 5;
  bool no_balance = false;
  int hidden = 32, layers = 2, head_hidden = 32;
};

std::string history_line(const model::EpochRecord& e) {
  json j;
  j["epoch"] = e.epoch;
  j["loss"] = e.loss;
  for (Task t : kAllTasks) j["acc_" + std::string(task_name(t))] = e.accuracy[static_cast<std::size_t>(t)];
  return j.dump();
}

void cmd_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  const VariantKind variant = parse_variant(a.variant);
  auto tc = model::TrainConfig::for_variant(variant);
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  tc.seed = c.seed;
  tc.workers = c.workers;
  tc.tasks = parse_tasks(a.tasks);
  tc.validate();

  const auto records = load_records(a.data);
  const auto split = dataset::split(records, a.split, c.seed);
  FeaturePlan plan = plan_from_args(variant, a.features, c.seed);
  plan.split_ratio = a.split;
  FeatureSource src = make_source(plan, a.features, split.train, false);
  auto seqs = build_sequences(src, split.train, c.workers);
  Eigen::Index rows = 0;
  for (const auto& s : seqs) rows = std::max(rows, s.rows());
  src.plan.sequence_rows = rows;
  const Eigen::Index width = seqs.front().cols();

  std::vector<model::TrainingExample<Scalar>> examples;
  examples.reserve(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    examples.push_back({pipeline::fit_rows(seqs[i], rows), labels_of(split.train[i], tc.tasks)});
  }
  seqs.clear();

  std::size_t synthetic = 0;
  if (!a.no_balance) {
    const std::size_t n_orig = examples.size();
    for (Task t : kAllTasks) {
      const auto ti = static_cast<std::size_t>(t);
      if (!tc.tasks[ti]) continue;
      balance::LabeledVectors<Scalar> lv;
      lv.features.resize(static_cast<Eigen::Index>(n_orig), rows * width);
      for (std::size_t i = 0; i < n_orig; ++i) {
        lv.features.row(static_cast<Eigen::Index>(i)) = pipeline::flatten(examples[i].sequence);
        lv.labels.push_back(examples[i].labels[ti]);
      }
      if (balance::class_counts(lv).size() < 2) continue;
      balance::SmoteOptions opt;
      opt.k = a.k;
      opt.seed = stream_seed(c.seed, "balance." + std::string(task_name(t)));
      const auto res = balance::balance_to_majority(lv, opt);
      for (Eigen::Index r = static_cast<Eigen::Index>(n_orig); r < res.data.size(); ++r) {
        model::TrainingExample<Scalar> ex;
        ex.sequence = pipeline::unflatten<Scalar>(res.data.features.row(r), rows, width);
        ex.labels[ti] = res.data.labels[static_cast<std::size_t>(r)];
        examples.push_back(std::move(ex));
      }
      synthetic += res.synthetic.size();
    }
  }

  model::ClassifierConfig mc;
  mc.input_width = static_cast<int>(width);
  mc.hidden = a.hidden;
  mc.bilstm_layers = a.layers;
  mc.head_hidden = a.head_hidden;
  mc.validate();

  const fs::path dir = a.out;
  fs::create_directories(dir / "checkpoints");
  {
    auto f = open_out(dir / "split.json");
    json j;
    j["seed"] = c.seed;
    j["ratio"] = a.split;
    json tr = json::array(), te = json::array();
    for (const auto& r : split.train) tr.push_back(r.id);
    for (const auto& r : split.test) te.push_back(r.id);
    j["train"] = tr;
    j["test"] = te;
    f << j.dump(2) << '\n';
  }
  auto history = open_out(dir / "history.jsonl");
  model::CheckpointInfo info;
  info.seed = c.seed;
  info.metadata = src.plan.to_metadata();
  info.metadata["learning_rate"] = json(tc.learning_rate).dump();
  info.metadata["batch_size"] = std::to_string(tc.batch_size);
  info.metadata["epochs"] = std::to_string(tc.epochs);
  const auto result = model::train<Scalar>(variant, mc, examples, tc, [&](const auto& params, const model::EpochRecord& e) {
    history << history_line(e) << '\n' << std::flush;
    info.epoch = e.epoch;
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d.ckpt", e.epoch);
    model::save_checkpoint<Scalar>((dir / "checkpoints" / name).string(), params, info);
  });
  info.epoch = tc.epochs;
  model::save_checkpoint<Scalar>((dir / "model.ckpt").string(), result.params, info);

  const auto& last = result.history.back();
  out << variant_heading(variant) << ": " << split.train.size() << " train records (+" << synthetic
      << " synthetic), " << tc.epochs << " epochs, lr " << json(tc.learning_rate).dump() << ", batch "
      << tc.batch_size << '\n';
  out << "final train accuracy:";
  for (Task t : kAllTasks) {
    const auto ti = static_cast<std::size_t>(t);
    if (tc.tasks[ti]) out << ' ' << task_name(t) << '=' << fixed(last.accuracy[ti], 4);
  }
  out << " loss=" << fixed(last.loss, 6) << '\n';
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  DataArgs data;
  FeatureArgs features;
  std::vector<std::string> checkpoints;
  std::string variant, out, split_file, split_part = "test";
};

std::vector<dataset::MemeRecord> select_ids(const std::vector<dataset::MemeRecord>& records,
                                            const std::vector<std::string>& ids) {
  std::map<std::string, const dataset::MemeRecord*, std::less<>> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<dataset::MemeRecord> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InputError("split lists unknown record '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

void cmd_eval(const EvalArgs& a, const Common& c, std::ostream& out) {
  const auto records = load_records(a.data);
  std::optional<std::vector<std::string>> fixed_ids;
  if (!a.split_file.empty()) {
    std::ifstream in(a.split_file);
    if (!in) throw InputError("cannot open '" + a.split_file + "'");
    try {
      fixed_ids = nlohmann::json::parse(in).at(a.split_part).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(a.split_file + ": " + e.what());
    }
  }

  std::vector<eval::VariantPredictions> predictions;
  std::optional<std::vector<std::string>> gold_ids;
  eval::TaskLabelMap gold;
  for (const auto& path : a.checkpoints) {
    model::CheckpointInfo info;
    const auto params = model::load_checkpoint<Scalar>(path, &info);
    if (!a.variant.empty() && parse_variant(a.variant) != info.variant) {
      throw InputError("checkpoint '" + path + "' holds a " + std::string(variant_heading(info.variant)) +
                       " model, not " + std::string(variant_heading(parse_variant(a.variant))));
    }
    for (const auto& p : predictions) {
      if (p.variant == info.variant) throw InputError("two checkpoints for " + std::string(variant_heading(info.variant)));
    }
    const FeaturePlan plan = FeaturePlan::from_metadata(info.variant, info.metadata);
    const auto test = fixed_ids ? select_ids(records, *fixed_ids)
                                : dataset::split(records, plan.split_ratio, info.seed).test;
    std::vector<std::string> ids;
    for (const auto& r : test) ids.push_back(r.id);
    if (!gold_ids) {
      gold_ids = ids;
      for (Task t : kAllTasks) {
        auto& g = gold[t];
        for (const auto& r : test) g.push_back(r.labels.index(t));
      }
    } else if (*gold_ids != ids) {
      throw InputError("checkpoints were trained on different splits; pass --split-file to evaluate on a common set");
    }

    const FeatureSource src = make_source(plan, a.features, test, true);
    const auto seqs = build_sequences(src, test, c.workers);
    if (!seqs.empty() && seqs.front().cols() != params.config.input_width) {
      throw InputError("features are " + std::to_string(seqs.front().cols()) + " wide but the checkpoint expects " +
                       std::to_string(params.config.input_width));
    }
    std::vector<model::TaskPredictions<Scalar>> preds(seqs.size());
    parallel_for(seqs.size(), c.workers, [&](std::size_t i) {
      preds[i] = model::forward_sequence(pipeline::fit_rows(seqs[i], plan.sequence_rows), params);
    });
    eval::VariantPredictions vp{info.variant, {}};
    for (Task t : kAllTasks) {
      auto& p = vp.predicted[t];
      for (const auto& pr : preds) p.push_back(pr.predicted(t));
    }
    predictions.push_back(std::move(vp));
  }
  if (gold_ids && gold_ids->empty()) throw InputError("evaluation set is empty");

  const auto report = eval::build_report(predictions, gold);
  const auto text = eval::format_report_text(report);
  const auto js = eval::format_report_json(report);
  if (!a.out.empty()) {
    open_out(fs::path(a.out) / "report.txt") << text;
    open_out(fs::path(a.out) / "report.json") << js;
  }
  out << (c.json ? js : text);
}

// ---------------------------------------------------------------------------
// embed

struct EmbedArgs {
  DataArgs data;
  FeatureArgs features;
  std::string role, out;
};

void cmd_embed(const EmbedArgs& a, const Common& c, std::ostream& out) {
  static const std::map<std::string, VariantKind> kRoleVariant = {
      {"image", VariantKind::imgtxt}, {"tokens", VariantKind::imgtxt},
      {"sentence", VariantKind::imgsen}, {"caption", VariantKind::capsen}};
  const auto rv = kRoleVariant.find(a.role);
  if (rv == kRoleVariant.end()) throw InputError("unknown embedding role '" + a.role + "'");
  const auto records = load_records(a.data);
  FeatureArgs fa = a.features;
  fa.toy = true;
  fa.embeddings.clear();
  FeatureSource src = make_source(plan_from_args(rv->second, fa, c.seed), fa, records, false);

  encode::EmbeddingTable table;
  const bool vector = a.role == "sentence" || a.role == "caption";
  table.kind = vector ? encode::EmbeddingKind::vector : encode::EmbeddingKind::sequence;
  std::vector<MatrixX<double>> values(records.size());
  parallel_for(records.size(), c.workers, [&](std::size_t i) {
    const auto in = side_inputs(src, records[i]);
    const auto& m = a.role == "image" ? in.image : a.role == "tokens" ? in.tokens : a.role == "sentence" ? in.sentence : in.caption;
    values[i] = m->cast<double>();
  });
  table.d = values.empty() ? (vector ? encode::kSentenceWidth : src.plan.settings.spec.d_model) : static_cast<int>(values.front().cols());
  for (std::size_t i = 0; i < records.size(); ++i) table.items[records[i].id] = std::move(values[i]);
  encode::write_embeddings(fs::path(a.out), table);
  out << table.size() << " " << a.role << " embeddings (d=" << table.d << ") -> " << a.out << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal meme sentiment classification: ingest, preprocess, balance, train, evaluate."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "memesent 1.0");

  Common common;
  DataArgs ingest_data;
  auto* ingest = app.add_subcommand("ingest", "Load an annotation file and print its label distributions");
  add_data_options(ingest, ingest_data);
  ingest->add_flag("--json", common.json, "Machine-readable output");

  PreprocessArgs pre;
  auto* preprocess = app.add_subcommand("preprocess", "Clean meme text into token lists (JSON lines)");
  add_data_options(preprocess, pre.data, false);
  preprocess->add_option("--texts", pre.texts, "JSON lines of {id, text} instead of a dataset")->check(CLI::ExistingFile);
  preprocess->add_option("--lexicon", pre.lexicon, "Emoji lexicon (TSV)")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--vocab", pre.vocab, "Vocabulary, one word per line")->check(CLI::ExistingFile);
  preprocess->add_option("--stemmer", pre.stemmer, "porter or none");
  preprocess->add_flag("--no-filter", pre.no_filter, "Skip the vocabulary filter");
  preprocess->add_option("--out", pre.out, "Output file (default stdout)");
  add_common_options(preprocess, common);

  BalanceArgs bal;
  auto* balance = app.add_subcommand("balance", "SMOTE-oversample a CSV of label,f1,...,fd rows to majority parity");
  balance->add_option("--input", bal.input, "Input CSV")->required()->check(CLI::ExistingFile);
  balance->add_option("--out", bal.out, "Output CSV (originals first, then synthetic rows)")->required();
  balance->add_option("--k", bal.k, "Nearest neighbours per sample")->check(CLI::PositiveNumber);
  balance->add_flag("--json", common.json, "Machine-readable summary");
  add_common_options(balance, common);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one variant; writes model.ckpt, history.jsonl, split.json");
  add_data_options(train, tr.data);
  add_feature_options(train, tr.features, true);
  train->add_option("--variant", tr.variant, "imgtxt, imgsen or capsen")->required();
  train->add_option("--epochs", tr.epochs, "Epochs (variant default 150/45/75)");
  train->add_option("--lr", tr.lr, "Adam learning rate (variant default 1e-3, capsen 3e-4)");
  train->add_option("--batch-size", tr.batch_size, "Mini-batch size (default 256)");
  train->add_option("--split", tr.split, "Train fraction of the seeded split");
  train->add_option("--k", tr.k, "SMOTE neighbours")->check(CLI::PositiveNumber);
  train->add_flag("--no-balance", tr.no_balance, "Skip SMOTE balancing of the train split");
  train->add_option("--tasks", tr.tasks, "Comma-separated tasks to train (default all)");
  train->add_option("--hidden", tr.hidden, "BiLSTM hidden size per direction");
  train->add_option("--layers", tr.layers, "BiLSTM layers");
  train->add_option("--head-hidden", tr.head_hidden, "Hidden units in each task head (0: none)");
  train->add_option("--out", tr.out, "Output directory")->required();
  add_common_options(train, common);

  EvalArgs ev;
  auto* evalc = app.add_subcommand("eval", "Score checkpoints on the held-out split; writes report.txt/report.json");
  add_data_options(evalc, ev.data);
  add_feature_options(evalc, ev.features, false);
  evalc->add_option("--checkpoint", ev.checkpoints, "Checkpoint file (repeat for several variants)")
      ->required()
      ->check(CLI::ExistingFile);
  evalc->add_option("--variant", ev.variant, "Expected variant of a single checkpoint");
  evalc->add_option("--split-file", ev.split_file, "split.json whose ids to evaluate on")->check(CLI::ExistingFile);
  evalc->add_option("--split-part", ev.split_part, "Which list of the split file to use (test or train)");
  evalc->add_option("--out", ev.out, "Report directory");
  evalc->add_flag("--json", common.json, "Print the JSON report instead of the tables");
  add_common_options(evalc, common);

  EmbedArgs em;
  auto* embed = app.add_subcommand("embed", "Export toy-encoder embeddings in the exchange format");
  add_data_options(embed, em.data);
  add_feature_options(embed, em.features, true);
  embed->add_option("--role", em.role, "image, tokens, sentence or caption")->required();
  embed->add_option("--out", em.out, "Output file")->required();
  add_common_options(embed, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*ingest) cmd_ingest(ingest_data, common, out);
    if (*preprocess) cmd_preprocess(pre, common, out);
    if (*balance) cmd_balance(bal, common, out);
    if (*train) cmd_train(tr, common, out);
    if (*evalc) cmd_eval(ev, common, out);
    if (*embed) cmd_embed(em, common, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace memesent::cli
