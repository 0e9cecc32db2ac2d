#include "exemplar/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace exemplar::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(s);
  while (std::getline(ss, part, sep)) parts.push_back(trim(part));
  return parts;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Typed getters with file:line diagnostics; missing keys keep defaults.
struct Reader {
  const IniFile& ini;

  std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
    const auto* e = ini.find(sec, key);
    if (!e) return std::nullopt;
    return e->value;
  }

  void get(const std::string& sec, const std::string& key, std::string& out) const {
    if (auto v = raw(sec, key)) out = *v;
  }
  void get(const std::string& sec, const std::string& key, int& out) const {
    if (auto v = raw(sec, key)) {
      try {
        out = std::stoi(*v);
      } catch (const std::exception&) {
        throw ConfigError(ini.location(sec, key) + ": expected an integer, got '" + *v + "'");
      }
    }
  }
  void get(const std::string& sec, const std::string& key, double& out) const {
    if (auto v = raw(sec, key)) {
      try {
        out = std::stod(*v);
      } catch (const std::exception&) {
        throw ConfigError(ini.location(sec, key) + ": expected a number, got '" + *v + "'");
      }
    }
  }
  void get(const std::string& sec, const std::string& key, bool& out) const {
    if (auto v = raw(sec, key)) {
      if (*v == "true" || *v == "1") out = true;
      else if (*v == "false" || *v == "0") out = false;
      else
        throw ConfigError(ini.location(sec, key) + ": expected true/false, got '" + *v + "'");
    }
  }
  void get(const std::string& sec, const std::string& key, std::vector<int>& out) const {
    if (auto v = raw(sec, key)) {
      out.clear();
      for (const auto& p : split(*v, ',')) {
        if (p.empty()) continue;
        try {
          out.push_back(std::stoi(p));
        } catch (const std::exception&) {
          throw ConfigError(ini.location(sec, key) + ": expected integers, got '" + p + "'");
        }
      }
    }
  }
  void get(const std::string& sec, const std::string& key, std::vector<double>& out) const {
    if (auto v = raw(sec, key)) {
      out.clear();
      for (const auto& p : split(*v, ',')) {
        if (p.empty()) continue;
        try {
          out.push_back(std::stod(p));
        } catch (const std::exception&) {
          throw ConfigError(ini.location(sec, key) + ": expected numbers, got '" + p + "'");
        }
      }
    }
  }
  void get(const std::string& sec, const std::string& key,
           std::vector<std::uint64_t>& out) const {
    if (auto v = raw(sec, key)) {
      out.clear();
      for (const auto& p : split(*v, ',')) {
        if (p.empty()) continue;
        try {
          out.push_back(std::stoull(p));
        } catch (const std::exception&) {
          throw ConfigError(ini.location(sec, key) + ": expected seeds, got '" + p + "'");
        }
      }
    }
  }
};

template <typename T>
std::string join_list(const std::vector<T>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ",";
    if constexpr (std::is_same_v<T, double>) s += fmt_double(x);
    else s += std::to_string(x);
  }
  return s;
}

}  // namespace

const IniFile::Entry* IniFile::find(const std::string& section, const std::string& key) const {
  for (const auto& e : entries)
    if (e.section == section && e.key == key) return &e;
  return nullptr;
}

std::string IniFile::location(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (e) return path + ":" + std::to_string(e->line);
  return path;
}

IniFile parse_ini_text(const std::string& text, const std::string& path_for_errors) {
  IniFile ini;
  ini.path = path_for_errors;
  std::istringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(path_for_errors + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path_for_errors + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    IniFile::Entry e;
    e.section = section;
    e.key = trim(t.substr(0, eq));
    e.value = trim(t.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty())
      throw ConfigError(path_for_errors + ":" + std::to_string(line_no) + ": empty key");
    ini.entries.push_back(std::move(e));
  }
  return ini;
}

IniFile parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ini_text(ss.str(), path);
}

std::string experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Pretrain: return "pretrain";
    case ExperimentKind::LinearProbe: return "linear_probe";
    case ExperimentKind::FewShot: return "few_shot";
    case ExperimentKind::Landmark: return "landmark";
    case ExperimentKind::Invert: return "invert";
    case ExperimentKind::Diagnose: return "diagnose";
    case ExperimentKind::AblateAugmentations: return "ablate_augmentations";
    case ExperimentKind::AblateTauK: return "ablate_tau_k";
  }
  return "?";
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::Pretrain, ExperimentKind::LinearProbe, ExperimentKind::FewShot,
        ExperimentKind::Landmark, ExperimentKind::Invert, ExperimentKind::Diagnose,
        ExperimentKind::AblateAugmentations, ExperimentKind::AblateTauK})
    if (experiment_kind_name(k) == name) return k;
  throw ConfigError("unknown experiment kind: '" + name + "'");
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "kind = " << experiment_kind_name(kind) << "\n";
  o << "seeds = " << join_list(seeds) << "\n";
  o << "output = " << output << "\n";
  o << "\n[data]\n";
  o << "source = " << data.source << "\n";
  o << "path = " << data.path << "\n";
  o << "test_path = " << data.test_path << "\n";
  o << "n_classes = " << data.n_classes << "\n";
  o << "per_class = " << data.per_class << "\n";
  o << "test_per_class = " << data.test_per_class << "\n";
  o << "image_size = " << data.image_size << "\n";
  o << "pipeline_level = " << data.pipeline_level << "\n";
  o << "pipeline_mode = "
    << (data.pipeline_mode == data::PipelineMode::Supervised ? "supervised" : "unsupervised")
    << "\n";
  o << "\n[backbone]\n";
  o << "in_channels = " << backbone.in_channels << "\n";
  o << "input_size = " << backbone.input_size << "\n";
  o << "channels = " << join_list(backbone.channels) << "\n";
  o << "embed_dim = " << backbone.embed_dim << "\n";
  o << "proj_hidden = " << backbone.proj_hidden << "\n";
  o << "batchnorm = " << (backbone.batchnorm ? "true" : "false") << "\n";
  o << "\n[contrast]\n";
  o << "variant = " << contrast::variant_name(contrast.variant) << "\n";
  o << "tau = " << fmt_double(contrast.tau) << "\n";
  o << "queue_capacity = " << contrast.queue_capacity << "\n";
  o << "momentum = " << fmt_double(contrast.momentum) << "\n";
  o << "epochs = " << contrast.epochs << "\n";
  o << "batch_size = " << contrast.batch_size << "\n";
  o << "lr = " << fmt_double(contrast.lr) << "\n";
  o << "cosine = " << (contrast.cosine ? "true" : "false") << "\n";
  o << "weight_decay = " << fmt_double(contrast.weight_decay) << "\n";
  o << "sgd_momentum = " << fmt_double(contrast.sgd_momentum) << "\n";
  o << "\n[probe]\n";
  o << "epochs = " << probe.epochs << "\n";
  o << "lr = " << fmt_double(probe.lr) << "\n";
  o << "checkpoint = " << probe.checkpoint << "\n";
  o << "\n[few_shot]\n";
  o << "n_way = " << few_shot.n_way << "\n";
  o << "k_shot = " << few_shot.k_shot << "\n";
  o << "n_query = " << few_shot.n_query << "\n";
  o << "episodes = " << few_shot.episodes << "\n";
  o << "rounds = " << few_shot.rounds << "\n";
  o << "lr_grid = " << join_list(few_shot.lr_grid) << "\n";
  o << "validation_episodes = " << few_shot.validation_episodes << "\n";
  o << "encoder = " << few_shot.encoder << "\n";
  o << "checkpoint = " << few_shot.checkpoint << "\n";
  o << "\n[landmark]\n";
  o << "n_images = " << landmark.n_images << "\n";
  o << "n_test_images = " << landmark.n_test_images << "\n";
  o << "epochs = " << landmark.epochs << "\n";
  o << "lr = " << fmt_double(landmark.lr) << "\n";
  o << "reduced_channels = " << landmark.reduced_channels << "\n";
  o << "encoder = " << landmark.encoder << "\n";
  o << "checkpoint = " << landmark.checkpoint << "\n";
  o << "\n[invert]\n";
  o << "spec = " << invert.spec << "\n";
  o << "iterations = " << invert.iterations << "\n";
  o << "lr = " << fmt_double(invert.lr) << "\n";
  o << "noise_low = " << fmt_double(invert.noise_low) << "\n";
  o << "noise_high = " << fmt_double(invert.noise_high) << "\n";
  o << "n_images = " << invert.n_images << "\n";
  o << "encoder = " << invert.encoder << "\n";
  o << "checkpoint = " << invert.checkpoint << "\n";
  o << "\n[diagnose]\n";
  o << "detections = " << diagnose.detections << "\n";
  o << "ground_truth = " << diagnose.ground_truth << "\n";
  o << "similarity = " << diagnose.similarity << "\n";
  o << "weak_iou = " << fmt_double(diagnose.weak_iou) << "\n";
  o << "correct_iou = " << fmt_double(diagnose.correct_iou) << "\n";
  o << "\n[ablate]\n";
  o << "taus = " << join_list(ablate.taus) << "\n";
  o << "queue_capacities = " << join_list(ablate.queue_capacities) << "\n";
  o << "levels = " << join_list(ablate.levels) << "\n";
  return o.str();
}

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  ExperimentConfig c;
  const Reader r{ini};

  std::string kind_name = experiment_kind_name(c.kind);
  r.get("experiment", "kind", kind_name);
  try {
    c.kind = experiment_kind_from_name(kind_name);
  } catch (const ConfigError& e) {
    throw ConfigError(ini.location("experiment", "kind") + ": " + e.what());
  }
  r.get("experiment", "seeds", c.seeds);
  r.get("experiment", "output", c.output);

  r.get("data", "source", c.data.source);
  r.get("data", "path", c.data.path);
  r.get("data", "test_path", c.data.test_path);
  r.get("data", "n_classes", c.data.n_classes);
  r.get("data", "per_class", c.data.per_class);
  r.get("data", "test_per_class", c.data.test_per_class);
  r.get("data", "image_size", c.data.image_size);
  r.get("data", "pipeline_level", c.data.pipeline_level);
  std::string mode = c.data.pipeline_mode == data::PipelineMode::Supervised ? "supervised"
                                                                            : "unsupervised";
  r.get("data", "pipeline_mode", mode);
  if (mode == "supervised") c.data.pipeline_mode = data::PipelineMode::Supervised;
  else if (mode == "unsupervised") c.data.pipeline_mode = data::PipelineMode::Unsupervised;
  else
    throw ConfigError(ini.location("data", "pipeline_mode") +
                      ": expected supervised|unsupervised, got '" + mode + "'");

  r.get("backbone", "in_channels", c.backbone.in_channels);
  r.get("backbone", "input_size", c.backbone.input_size);
  r.get("backbone", "channels", c.backbone.channels);
  r.get("backbone", "embed_dim", c.backbone.embed_dim);
  r.get("backbone", "proj_hidden", c.backbone.proj_hidden);
  r.get("backbone", "batchnorm", c.backbone.batchnorm);

  std::string variant = contrast::variant_name(c.contrast.variant);
  r.get("contrast", "variant", variant);
  try {
    c.contrast.variant = contrast::variant_from_name(variant);
  } catch (const std::exception& e) {
    throw ConfigError(ini.location("contrast", "variant") + ": " + e.what());
  }
  r.get("contrast", "tau", c.contrast.tau);
  r.get("contrast", "queue_capacity", c.contrast.queue_capacity);
  r.get("contrast", "momentum", c.contrast.momentum);
  r.get("contrast", "epochs", c.contrast.epochs);
  r.get("contrast", "batch_size", c.contrast.batch_size);
  r.get("contrast", "lr", c.contrast.lr);
  r.get("contrast", "cosine", c.contrast.cosine);
  r.get("contrast", "weight_decay", c.contrast.weight_decay);
  r.get("contrast", "sgd_momentum", c.contrast.sgd_momentum);

  r.get("probe", "epochs", c.probe.epochs);
  r.get("probe", "lr", c.probe.lr);
  r.get("probe", "checkpoint", c.probe.checkpoint);

  r.get("few_shot", "n_way", c.few_shot.n_way);
  r.get("few_shot", "k_shot", c.few_shot.k_shot);
  r.get("few_shot", "n_query", c.few_shot.n_query);
  r.get("few_shot", "episodes", c.few_shot.episodes);
  r.get("few_shot", "rounds", c.few_shot.rounds);
  r.get("few_shot", "lr_grid", c.few_shot.lr_grid);
  r.get("few_shot", "validation_episodes", c.few_shot.validation_episodes);
  r.get("few_shot", "encoder", c.few_shot.encoder);
  r.get("few_shot", "checkpoint", c.few_shot.checkpoint);

  r.get("landmark", "n_images", c.landmark.n_images);
  r.get("landmark", "n_test_images", c.landmark.n_test_images);
  r.get("landmark", "epochs", c.landmark.epochs);
  r.get("landmark", "lr", c.landmark.lr);
  r.get("landmark", "reduced_channels", c.landmark.reduced_channels);
  r.get("landmark", "encoder", c.landmark.encoder);
  r.get("landmark", "checkpoint", c.landmark.checkpoint);

  r.get("invert", "spec", c.invert.spec);
  r.get("invert", "iterations", c.invert.iterations);
  r.get("invert", "lr", c.invert.lr);
  r.get("invert", "noise_low", c.invert.noise_low);
  r.get("invert", "noise_high", c.invert.noise_high);
  r.get("invert", "n_images", c.invert.n_images);
  r.get("invert", "encoder", c.invert.encoder);
  r.get("invert", "checkpoint", c.invert.checkpoint);

  r.get("diagnose", "detections", c.diagnose.detections);
  r.get("diagnose", "ground_truth", c.diagnose.ground_truth);
  r.get("diagnose", "similarity", c.diagnose.similarity);
  r.get("diagnose", "weak_iou", c.diagnose.weak_iou);
  r.get("diagnose", "correct_iou", c.diagnose.correct_iou);

  r.get("ablate", "taus", c.ablate.taus);
  r.get("ablate", "queue_capacities", c.ablate.queue_capacities);
  r.get("ablate", "levels", c.ablate.levels);
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_ini(parse_ini_file(path));
}

void ExperimentConfig::validate(const IniFile* source) const {
  auto loc = [&](const std::string& sec, const std::string& key) {
    return source ? source->location(sec, key) : std::string("config");
  };
  auto require_file = [&](const std::string& path, const std::string& sec,
                          const std::string& key) {
    if (path.empty())
      throw ConfigError(loc(sec, key) + ": " + sec + "." + key + " is required for " +
                        experiment_kind_name(kind));
    if (!fs::exists(path))
      throw ConfigError(loc(sec, key) + ": referenced file does not exist: " + path);
  };

  if (seeds.empty()) throw ConfigError(loc("experiment", "seeds") + ": seed list is empty");
  if (output.empty()) throw ConfigError(loc("experiment", "output") + ": output is empty");
  if (data.source != "synthetic" && data.source != "directory" && data.source != "manifest")
    throw ConfigError(loc("data", "source") + ": unknown data source '" + data.source + "'");
  if (data.source != "synthetic") require_file(data.path, "data", "path");
  if (data.pipeline_level < 1 || data.pipeline_level > 5)
    throw ConfigError(loc("data", "pipeline_level") + ": pipeline level must be in 1..5");
  try {
    contrast.validate();
  } catch (const std::exception& e) {
    throw ConfigError(loc("contrast", "tau") + ": " + e.what());
  }

  switch (kind) {
    case ExperimentKind::LinearProbe:
      require_file(probe.checkpoint, "probe", "checkpoint");
      break;
    case ExperimentKind::FewShot:
      if (few_shot.encoder == "checkpoint") require_file(few_shot.checkpoint, "few_shot", "checkpoint");
      else if (few_shot.encoder != "random")
        throw ConfigError(loc("few_shot", "encoder") + ": expected random|checkpoint");
      break;
    case ExperimentKind::Landmark:
      if (landmark.encoder == "checkpoint") require_file(landmark.checkpoint, "landmark", "checkpoint");
      else if (landmark.encoder != "random")
        throw ConfigError(loc("landmark", "encoder") + ": expected random|checkpoint");
      break;
    case ExperimentKind::Invert:
      if (invert.encoder == "checkpoint") require_file(invert.checkpoint, "invert", "checkpoint");
      else if (invert.encoder != "identity" && invert.encoder != "random")
        throw ConfigError(loc("invert", "encoder") + ": expected identity|random|checkpoint");
      if (invert.spec != "default" && invert.spec != "small" &&
          invert.spec.find("encoder:") == std::string::npos)
        throw ConfigError(loc("invert", "spec") + ": expected default|small or block notation");
      break;
    case ExperimentKind::Diagnose:
      require_file(diagnose.detections, "diagnose", "detections");
      require_file(diagnose.ground_truth, "diagnose", "ground_truth");
      if (!diagnose.similarity.empty()) require_file(diagnose.similarity, "diagnose", "similarity");
      if (!(diagnose.weak_iou > 0 && diagnose.weak_iou < diagnose.correct_iou &&
            diagnose.correct_iou < 1))
        throw ConfigError(loc("diagnose", "weak_iou") +
                          ": need 0 < weak_iou < correct_iou < 1");
      break;
    case ExperimentKind::AblateTauK:
      if (ablate.taus.empty() || ablate.queue_capacities.empty())
        throw ConfigError(loc("ablate", "taus") + ": empty ablation grid");
      break;
    case ExperimentKind::AblateAugmentations:
      if (ablate.levels.empty())
        throw ConfigError(loc("ablate", "levels") + ": empty level list");
      for (int l : ablate.levels)
        if (l < 1 || l > 5)
          throw ConfigError(loc("ablate", "levels") + ": levels must be in 1..5");
      break;
    default: break;
  }
}

}  // namespace exemplar::harness
