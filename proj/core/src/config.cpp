// Copyright 2026 The picie-cpp Authors. All Rights Reserved.
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

#include "picie/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "picie/binary_io.hpp"
#include "picie/errors.hpp"

extern char** environ;

namespace picie {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, std::is_integral_v<T> ? "an integer" : "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Field {
  std::string key;
  bool hashed;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field int_field(std::string key, bool hashed, T RunConfig::*outer, int T::*member) {
  return {std::move(key), hashed,
          [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*outer).*member = parse_number<int>(k, v); },
          [=](const RunConfig& c) { return std::to_string((c.*outer).*member); }};
}

template <typename T>
Field double_field(std::string key, bool hashed, T RunConfig::*outer, double T::*member) {
  return {std::move(key), hashed,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*outer).*member = parse_number<double>(k, v);
          },
          [=](const RunConfig& c) { return format_double((c.*outer).*member); }};
}

// Nested member access for TrainConfig sub-structs.
template <typename S, typename M>
Field train_field(std::string key, S TrainConfig::*sub, M S::*member) {
  return {std::move(key), true,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.train.*sub).*member = parse_number<M>(k, v);
          },
          [=](const RunConfig& c) {
            if constexpr (std::is_same_v<M, double>) return format_double((c.train.*sub).*member);
            else return std::to_string((c.train.*sub).*member);
          }};
}

std::string join_partitions(const std::vector<Partition>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p.name + ':';
    // Compress consecutive runs back into a-b ranges.
    for (std::size_t i = 0; i < p.classes.size();) {
      std::size_t j = i;
      while (j + 1 < p.classes.size() && p.classes[j + 1] == p.classes[j] + 1) ++j;
      if (i > 0) out += ',';
      out += std::to_string(p.classes[i]);
      if (j > i) out += '-' + std::to_string(p.classes[j]);
      i = j + 1;
    }
  }
  return out;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"data.source", false,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   if (v == "synthetic") c.source = DataSource::kSynthetic;
                   else if (v == "directory") c.source = DataSource::kDirectory;
                   else bad_value(k, v, "synthetic or directory");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.source == DataSource::kSynthetic ? "synthetic" : "directory");
                 }});
    f.push_back({"data.root", false,
                 [](RunConfig& c, const std::string&, const std::string& v) { c.manifest.root = v; },
                 [](const RunConfig& c) { return c.manifest.root.string(); }});
    f.push_back({"data.split", false,
                 [](RunConfig& c, const std::string&, const std::string& v) { c.manifest.split = v; },
                 [](const RunConfig& c) { return c.manifest.split; }});
    f.push_back(int_field("data.resolution", false, &RunConfig::manifest, &DatasetManifest::resolution));
    f.push_back(int_field("data.n_classes", false, &RunConfig::manifest, &DatasetManifest::n_classes));
    f.push_back({"data.remap", false,
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   if (v.empty()) c.remap_path.reset();
                   else c.remap_path = v;
                 },
                 [](const RunConfig& c) { return c.remap_path ? c.remap_path->string() : std::string(); }});
    f.push_back({"data.ignore_value", false,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.manifest.ignore_value = parse_number<std::int32_t>(k, v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.manifest.ignore_value); }});

    f.push_back(int_field("synthetic.n_images", false, &RunConfig::synthetic, &SyntheticSpec::n_images));
    f.push_back(int_field("synthetic.side", false, &RunConfig::synthetic, &SyntheticSpec::side));
    f.push_back(int_field("synthetic.n_classes", false, &RunConfig::synthetic, &SyntheticSpec::n_classes));
    f.push_back(int_field("synthetic.min_objects", false, &RunConfig::synthetic, &SyntheticSpec::min_objects));
    f.push_back(int_field("synthetic.max_objects", false, &RunConfig::synthetic, &SyntheticSpec::max_objects));
    f.push_back(int_field("synthetic.texture_period", false, &RunConfig::synthetic, &SyntheticSpec::texture_period));
    f.push_back(double_field("synthetic.brightness_range", false, &RunConfig::synthetic,
                             &SyntheticSpec::brightness_range));
    f.push_back(
        double_field("synthetic.contrast_range", false, &RunConfig::synthetic, &SyntheticSpec::contrast_range));
    f.push_back(double_field("synthetic.hue_range", false, &RunConfig::synthetic, &SyntheticSpec::hue_range));
    f.push_back(double_field("synthetic.noise_sigma", false, &RunConfig::synthetic, &SyntheticSpec::noise_sigma));
    f.push_back({"synthetic.seed", false,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.synthetic.seed = parse_number<std::uint64_t>(k, v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.synthetic.seed); }});

    f.push_back({"model.backbone", true,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.extractor.backbone = backbone_from_string(v);
                   } catch (const ConfigError&) {
                     bad_value(k, v, "tiny or resnet18");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.extractor.backbone)); }});
    f.push_back(int_field("model.dim", true, &RunConfig::extractor, &ExtractorConfig::dim));
    f.push_back(int_field("model.stride", true, &RunConfig::extractor, &ExtractorConfig::stride));
    f.push_back({"model.pretrained", true,
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   if (v.empty()) c.extractor.pretrained.reset();
                   else c.extractor.pretrained = v;
                 },
                 [](const RunConfig& c) {
                   return c.extractor.pretrained ? c.extractor.pretrained->string() : std::string();
                 }});

    f.push_back({"method", true,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.train.method = method_from_string(v);
                   } catch (const ConfigError&) {
                     bad_value(k, v, "picie, mdc or no-train");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.train.method)); }});
    f.push_back({"seed", true,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.train.seed = parse_number<std::uint64_t>(k, v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.train.seed); }});
    f.push_back({"deterministic", false,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.train.deterministic = parse_bool(k, v);
                 },
                 [](const RunConfig& c) { return std::string(c.train.deterministic ? "true" : "false"); }});

    f.push_back(int_field("train.k1", true, &RunConfig::train, &TrainConfig::k1));
    f.push_back(int_field("train.k2", true, &RunConfig::train, &TrainConfig::k2));
    f.push_back(int_field("train.epochs", true, &RunConfig::train, &TrainConfig::epochs));
    f.push_back(int_field("train.batch_size", true, &RunConfig::train, &TrainConfig::batch_size));
    f.push_back(train_field("train.lr", &TrainConfig::adam, &AdamConfig::lr));
    f.push_back(train_field("train.beta1", &TrainConfig::adam, &AdamConfig::beta1));
    f.push_back(train_field("train.beta2", &TrainConfig::adam, &AdamConfig::beta2));
    f.push_back(train_field("train.weight_decay", &TrainConfig::adam, &AdamConfig::weight_decay));
    f.push_back({"train.cross_view", true,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   if (v == "prototype") c.train.cross_view = CrossViewMode::kPrototype;
                   else if (v == "mse") c.train.cross_view = CrossViewMode::kMse;
                   else bad_value(k, v, "prototype or mse");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.train.cross_view == CrossViewMode::kPrototype ? "prototype" : "mse");
                 }});
    f.push_back({"train.single_clustering", true,
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.train.single_clustering = parse_bool(k, v);
                 },
                 [](const RunConfig& c) { return std::string(c.train.single_clustering ? "true" : "false"); }});

    f.push_back(train_field("kmeans.init_batches", &TrainConfig::kmeans, &KMeansOptions::init_batches));
    f.push_back(train_field("kmeans.batch_size", &TrainConfig::kmeans, &KMeansOptions::batch_size));
    f.push_back(train_field("kmeans.update_period", &TrainConfig::kmeans, &KMeansOptions::update_period));
    f.push_back(train_field("kmeans.passes", &TrainConfig::kmeans, &KMeansOptions::passes));
    f.push_back(train_field("kmeans.init_iterations", &TrainConfig::kmeans, &KMeansOptions::init_iterations));
    f.push_back(train_field("kmeans.init_restarts", &TrainConfig::kmeans, &KMeansOptions::init_restarts));

    f.push_back(train_field("aug.jitter_p", &TrainConfig::transforms, &TransformRanges::jitter_p));
    f.push_back(train_field("aug.brightness", &TrainConfig::transforms, &TransformRanges::brightness));
    f.push_back(train_field("aug.contrast", &TrainConfig::transforms, &TransformRanges::contrast));
    f.push_back(train_field("aug.saturation", &TrainConfig::transforms, &TransformRanges::saturation));
    f.push_back(train_field("aug.hue", &TrainConfig::transforms, &TransformRanges::hue));
    f.push_back(train_field("aug.grayscale_p", &TrainConfig::transforms, &TransformRanges::grayscale_p));
    f.push_back(train_field("aug.blur_p", &TrainConfig::transforms, &TransformRanges::blur_p));
    f.push_back(train_field("aug.blur_sigma_min", &TrainConfig::transforms, &TransformRanges::blur_sigma_min));
    f.push_back(train_field("aug.blur_sigma_max", &TrainConfig::transforms, &TransformRanges::blur_sigma_max));
    f.push_back(train_field("aug.flip_p", &TrainConfig::transforms, &TransformRanges::flip_p));
    f.push_back(train_field("aug.crop_min", &TrainConfig::transforms, &TransformRanges::crop_min));
    f.push_back(train_field("aug.crop_max", &TrainConfig::transforms, &TransformRanges::crop_max));

    f.push_back({"eval.partitions", false,
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.partitions.clear();
                   std::stringstream ss(v);
                   std::string item;
                   while (ss >> item) c.partitions.push_back(parse_partition(item));
                 },
                 [](const RunConfig& c) { return join_partitions(c.partitions); }});
    f.push_back({"eval.robustness", false,
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.robustness = parse_bool(k, v); },
                 [](const RunConfig& c) { return std::string(c.robustness ? "true" : "false"); }});
    f.push_back({"output.dir", false,
                 [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir.string(); }});
    return f;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

RunConfig::RunConfig() {
  // Desk-scale defaults: synthetic data, no overclustering head beyond K1.
  train.k1 = synthetic.n_classes;
  manifest.n_classes = synthetic.n_classes;
}

void RunConfig::set(const std::string& key, const std::string& value) { find_field(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return find_field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return out;
}

std::string RunConfig::snapshot() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

std::uint64_t RunConfig::model_hash() const {
  std::string s;
  for (const auto& f : fields())
    if (f.hashed) s += f.key + "=" + f.get(*this) + "\n";
  return fnv1a64(s);
}

int RunConfig::n_classes() const {
  return source == DataSource::kSynthetic ? synthetic.n_classes : manifest.n_classes;
}

void RunConfig::validate() const {
  extractor.validate();
  train.validate();
  if (source == DataSource::kDirectory && manifest.root.empty())
    throw ConfigError("config key 'data.root' must be set when data.source = directory");
  if (manifest.resolution <= 0) throw ConfigError("config key 'data.resolution' must be positive");
  if (n_classes() < 1) throw ConfigError("number of classes must be positive");
  if (output_dir.empty()) throw ConfigError("config key 'output.dir' must not be empty");
  for (const auto& p : partitions)
    for (int c : p.classes)
      if (c < 0 || c >= n_classes())
        throw ConfigError("config key 'eval.partitions': class " + std::to_string(c) + " outside [0, " +
                          std::to_string(n_classes()) + ")");
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      c.set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' must look like key=value");
    config.set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

void apply_environment(RunConfig& config, const std::map<std::string, std::string>& env) {
  static const std::string prefix = "PICIE_";
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string key;
    const std::string rest = name.substr(prefix.size());
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i] == '_' && i + 1 < rest.size() && rest[i + 1] == '_') {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(rest[i])));
      }
    }
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("environment variable " + name + ": " + e.what());
    }
  }
}

std::map<std::string, std::string> picie_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind("PICIE_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    out[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return out;
}

LoadResult load_dataset(const RunConfig& config) {
  if (config.source == DataSource::kSynthetic) {
    LoadResult r;
    r.samples = generate_synthetic(config.synthetic);
    return r;
  }
  DatasetManifest m = config.manifest;
  if (config.remap_path) m.label_remap = read_remap_table(*config.remap_path);
  return load_and_preprocess(m);
}

}  // namespace picie
