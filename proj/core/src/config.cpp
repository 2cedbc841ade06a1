#include "rednet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "rednet/error.hpp"

namespace rednet {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

template <typename I>
I parse_int(const std::string& key, const std::string& v) {
  I out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean (true/false/on/off)");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define INT_KEY(NAME, FIELD, TYPE)                                                                     \
  Key {                                                                                                \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_int<TYPE>(k, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                                     \
  }
#define REAL_KEY(NAME, FIELD)                                                                          \
  Key {                                                                                                \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_double(k, v); }, \
        [](const RunConfig& c) { return fmt(c.FIELD); }                                                \
  }
#define BOOL_KEY(NAME, FIELD)                                                                          \
  Key {                                                                                                \
    NAME, [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_bool(k, v); }, \
        [](const RunConfig& c) { return fmt(c.FIELD); }                                                \
  }
#define STR_KEY(NAME, FIELD)                                                                           \
  Key {                                                                                                \
    NAME, [](RunConfig& c, const std::string&, const std::string& v) { c.FIELD = v; },                 \
        [](const RunConfig& c) { return c.FIELD; }                                                     \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      INT_KEY("model.encoder_depth", encoder_depth, int),
      INT_KEY("model.num_classes", num_classes, int),
      INT_KEY("model.height", height, int),
      INT_KEY("model.width", width, int),
      INT_KEY("model.channel_divisor", channel_divisor, int),
      INT_KEY("train.epochs", epochs, int64_t),
      INT_KEY("train.batch_size", batch_size, int),
      REAL_KEY("train.lr", sgd.base_lr),
      REAL_KEY("train.momentum", sgd.momentum),
      REAL_KEY("train.weight_decay", sgd.weight_decay),
      REAL_KEY("train.lr_decay", sgd.lr_decay),
      INT_KEY("train.lr_decay_every", sgd.lr_decay_every, int64_t),
      BOOL_KEY("train.decay_bn", sgd.decay_bn),
      BOOL_KEY("train.pyramid", pyramid),
      BOOL_KEY("train.median_frequency", median_frequency),
      INT_KEY("train.early_stop_patience", early_stop_patience, int64_t),
      REAL_KEY("train.early_stop_rel", early_stop_rel),
      INT_KEY("train.checkpoint_every", checkpoint_every, int64_t),
      INT_KEY("train.seed", seed, uint64_t),
      STR_KEY("data.manifest", manifest),
      STR_KEY("data.val_manifest", val_manifest),
      STR_KEY("data.histogram", histogram),
      INT_KEY("data.workers", workers, int),
      BOOL_KEY("augment.enabled", augment.enabled),
      REAL_KEY("augment.scale_min", augment.scale_min),
      REAL_KEY("augment.scale_max", augment.scale_max),
      REAL_KEY("augment.brightness", augment.brightness),
      REAL_KEY("augment.saturation", augment.saturation),
      REAL_KEY("augment.hue", augment.hue),
      STR_KEY("output.dir", output_dir),
  };
  return table;
}

}  // namespace

NetworkConfig RunConfig::network() const {
  return NetworkConfig::for_depth(encoder_depth, num_classes, height, width).scaled(channel_divisor);
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(epochs >= 0, "train.epochs must be >= 0");
  require(batch_size >= 1, "train.batch_size must be >= 1");
  require(sgd.base_lr >= 0, "train.lr must be >= 0");
  require(sgd.momentum >= 0 && sgd.momentum < 1, "train.momentum must be in [0, 1)");
  require(sgd.weight_decay >= 0, "train.weight_decay must be >= 0");
  require(sgd.lr_decay > 0 && sgd.lr_decay <= 1, "train.lr_decay must be in (0, 1]");
  require(sgd.lr_decay_every >= 1, "train.lr_decay_every must be >= 1");
  require(early_stop_patience >= 1, "train.early_stop_patience must be >= 1");
  require(early_stop_rel >= 0, "train.early_stop_rel must be >= 0");
  require(checkpoint_every >= 1, "train.checkpoint_every must be >= 1");
  require(workers >= 1, "data.workers must be >= 1");
  require(augment.scale_min > 0 && augment.scale_min <= augment.scale_max, "augment scale range is empty");
  require(augment.scale_min >= 1.0, "augment.scale_min must be >= 1 (crops return to the target size)");
  require(augment.brightness >= 0 && augment.brightness < 1, "augment.brightness must be in [0, 1)");
  require(augment.saturation >= 0 && augment.saturation < 1, "augment.saturation must be in [0, 1)");
  require(augment.hue >= 0 && augment.hue <= 0.5, "augment.hue must be in [0, 0.5]");
  require(!output_dir.empty(), "output.dir must not be empty");
  network().validate();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : key_table()) {
    if (key == k.name) {
      k.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& k : key_table()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# resolved configuration\n" << serialize();
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.emplace_back(k.name);
  return out;
}

}  // namespace rednet
