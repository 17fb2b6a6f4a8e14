#include "gsc/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long parse_int(const std::string& key, const std::string& value) {
  size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
  if (used != value.size()) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" + value + "'");
  }
  if (used != value.size()) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" + value + "'");
  }
  return out;
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }

    if (key == "train_dir") {
      cfg.train_dir = value;
    } else if (key == "eval_dir") {
      cfg.eval_dir = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "iterations") {
      cfg.iterations = static_cast<int>(parse_int(key, value));
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_real(key, value);
    } else if (key == "final_lr_scale") {
      cfg.final_lr_scale = parse_real(key, value);
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "finetune_iterations") {
      cfg.finetune_iterations = static_cast<int>(parse_int(key, value));
    } else if (key == "seed") {
      cfg.seed = static_cast<uint64_t>(parse_int(key, value));
    } else if (key == "step_table_version") {
      cfg.step_table_version = static_cast<int>(parse_int(key, value));
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    }
  }
  if (cfg.step_table_version != kFormatVersion) {
    throw ConfigError("config: step_table_version " +
                      std::to_string(cfg.step_table_version) +
                      " not implemented by this build (expects " +
                      std::to_string(static_cast<int>(kFormatVersion)) + ")");
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace gsc
