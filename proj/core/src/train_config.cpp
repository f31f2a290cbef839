// SPDX-License-Identifier: Apache-2.0

#include "qgeom/train_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qgeom/errors.hpp"

namespace qgeom::train {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"dataset", {"kind", "points", "classes", "spread", "separation"}},
      {"net", {"hidden", "norm", "affine"}},
      {"quant",
       {"enabled", "weight_bits", "activation_bits", "activation_chunks", "pin_first_last"}},
      {"bifurcation", {"enabled", "low_bits", "high_bits"}},
      {"optim", {"learning_rate", "momentum", "batch_size", "epochs"}},
      {"train", {"seed", "trace_angles", "histogram_bins"}},
  };
  return keys;
}

[[noreturn]] void bad_value(const std::string& field, const std::string& value, const char* want) {
  throw ConfigError("config field " + field + ": invalid value '" + value + "' (expected " + want +
                    ")");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& field, const std::string& raw, const char* want) {
  const std::string v = trim(raw);
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(field, v, want);
  return out;
}

bool parse_bool(const std::string& field, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(field, v, "true or false");
}

std::vector<std::size_t> parse_widths(const std::string& field, const std::string& raw) {
  std::vector<std::size_t> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_number<std::size_t>(field, item, "comma-separated positive integers"));
  }
  return out;
}

template <class Fn>
void with(const pt::ptree& tree, const char* section, const char* key, const Fn& fn) {
  const auto sec = tree.get_child_optional(section);
  if (!sec) return;
  const auto val = sec->get_optional<std::string>(key);
  if (!val) return;
  const std::string field = std::string(section) + "." + key;
  fn(field, *val);
}

// '#' comments are accepted in addition to the parser's ';'. Blanking the
// line keeps reported line numbers intact.
std::string strip_hash_comments(std::istream& in) {
  std::string out, line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') line.clear();
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

TrainConfig parse_train_config(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream cleaned(strip_hash_comments(in));
    pt::ini_parser::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (body.empty() || it == known_keys().end()) {
      throw ConfigError(source + ": unknown section or top-level key '" + section + "'");
    }
    for (const auto& kv : body) {
      if (!it->second.count(kv.first)) {
        throw ConfigError(source + ": unknown field " + section + "." + kv.first);
      }
    }
  }

  TrainConfig cfg;
  with(tree, "dataset", "kind", [&](const std::string& f, const std::string& v) {
    const std::string k = trim(v);
    if (k == "blobs") cfg.data.kind = DatasetKind::Blobs;
    else if (k == "rings") cfg.data.kind = DatasetKind::Rings;
    else bad_value(f, k, "blobs or rings");
  });
  with(tree, "dataset", "points", [&](const auto& f, const auto& v) {
    cfg.data.points = parse_number<std::size_t>(f, v, "a positive integer");
  });
  with(tree, "dataset", "classes", [&](const auto& f, const auto& v) {
    cfg.data.classes = parse_number<std::size_t>(f, v, "a positive integer");
    cfg.net.outputs = cfg.data.classes;
  });
  with(tree, "dataset", "spread",
       [&](const auto& f, const auto& v) { cfg.data.spread = parse_number<double>(f, v, "a real number"); });
  with(tree, "dataset", "separation",
       [&](const auto& f, const auto& v) { cfg.data.separation = parse_number<double>(f, v, "a real number"); });

  with(tree, "net", "hidden", [&](const auto& f, const auto& v) { cfg.net.hidden = parse_widths(f, v); });
  with(tree, "net", "norm", [&](const std::string& f, const std::string& v) {
    const std::string k = trim(v);
    if (k == "range") cfg.net.norm = NormKind::Range;
    else if (k == "standard") cfg.net.norm = NormKind::Standard;
    else if (k == "none") cfg.net.norm = NormKind::None;
    else bad_value(f, k, "range, standard or none");
  });
  with(tree, "net", "affine", [&](const auto& f, const auto& v) { cfg.net.affine = parse_bool(f, v); });

  with(tree, "quant", "enabled", [&](const auto& f, const auto& v) { cfg.quant.enabled = parse_bool(f, v); });
  with(tree, "quant", "weight_bits", [&](const auto& f, const auto& v) {
    cfg.quant.weight_bits = parse_number<int>(f, v, "an integer");
  });
  with(tree, "quant", "activation_bits", [&](const auto& f, const auto& v) {
    cfg.quant.activation_bits = parse_number<int>(f, v, "an integer");
  });
  with(tree, "quant", "activation_chunks", [&](const auto& f, const auto& v) {
    cfg.quant.activation_chunks = parse_number<int>(f, v, "an integer");
  });
  with(tree, "quant", "pin_first_last",
       [&](const auto& f, const auto& v) { cfg.quant.pin_first_last = parse_bool(f, v); });

  with(tree, "bifurcation", "enabled",
       [&](const auto& f, const auto& v) { cfg.quant.bifurcation.enabled = parse_bool(f, v); });
  with(tree, "bifurcation", "low_bits", [&](const auto& f, const auto& v) {
    cfg.quant.bifurcation.low_bits = parse_number<int>(f, v, "an integer");
  });
  with(tree, "bifurcation", "high_bits", [&](const std::string& f, const std::string& v) {
    if (trim(v) == "full") {
      cfg.quant.bifurcation.high_bits.reset();
    } else {
      cfg.quant.bifurcation.high_bits = parse_number<int>(f, v, "an integer or 'full'");
    }
  });

  with(tree, "optim", "learning_rate", [&](const auto& f, const auto& v) {
    cfg.optim.learning_rate = parse_number<double>(f, v, "a real number");
  });
  with(tree, "optim", "momentum",
       [&](const auto& f, const auto& v) { cfg.optim.momentum = parse_number<double>(f, v, "a real number"); });
  with(tree, "optim", "batch_size", [&](const auto& f, const auto& v) {
    cfg.optim.batch_size = parse_number<std::size_t>(f, v, "a positive integer");
  });
  with(tree, "optim", "epochs", [&](const auto& f, const auto& v) {
    cfg.optim.epochs = parse_number<std::size_t>(f, v, "a positive integer");
  });

  with(tree, "train", "seed", [&](const auto& f, const auto& v) {
    cfg.seed = parse_number<std::uint64_t>(f, v, "an unsigned 64-bit integer");
  });
  with(tree, "train", "trace_angles",
       [&](const auto& f, const auto& v) { cfg.trace_angles = parse_bool(f, v); });
  with(tree, "train", "histogram_bins", [&](const auto& f, const auto& v) {
    cfg.histogram_bins = parse_number<std::size_t>(f, v, "a positive integer");
  });

  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_train_config(in, path.string());
}

std::string to_ini(const TrainConfig& cfg) {
  const auto b = [](bool v) { return v ? "true" : "false"; };
  const auto real = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::ostringstream os;
  os << "[dataset]\n"
     << "kind = " << (cfg.data.kind == DatasetKind::Blobs ? "blobs" : "rings") << "\n"
     << "points = " << cfg.data.points << "\n"
     << "classes = " << cfg.data.classes << "\n"
     << "spread = " << real(cfg.data.spread) << "\n"
     << "separation = " << real(cfg.data.separation) << "\n\n";
  os << "[net]\nhidden = ";
  for (std::size_t i = 0; i < cfg.net.hidden.size(); ++i) os << (i ? "," : "") << cfg.net.hidden[i];
  os << "\nnorm = "
     << (cfg.net.norm == NormKind::Range ? "range"
                                         : cfg.net.norm == NormKind::Standard ? "standard" : "none")
     << "\naffine = " << b(cfg.net.affine) << "\n\n";
  os << "[quant]\n"
     << "enabled = " << b(cfg.quant.enabled) << "\n"
     << "weight_bits = " << cfg.quant.weight_bits << "\n"
     << "activation_bits = " << cfg.quant.activation_bits << "\n"
     << "activation_chunks = " << cfg.quant.activation_chunks << "\n"
     << "pin_first_last = " << b(cfg.quant.pin_first_last) << "\n\n";
  os << "[bifurcation]\n"
     << "enabled = " << b(cfg.quant.bifurcation.enabled) << "\n"
     << "low_bits = " << cfg.quant.bifurcation.low_bits << "\n"
     << "high_bits = "
     << (cfg.quant.bifurcation.high_bits ? std::to_string(*cfg.quant.bifurcation.high_bits) : "full")
     << "\n\n";
  os << "[optim]\n"
     << "learning_rate = " << real(cfg.optim.learning_rate) << "\n"
     << "momentum = " << real(cfg.optim.momentum) << "\n"
     << "batch_size = " << cfg.optim.batch_size << "\n"
     << "epochs = " << cfg.optim.epochs << "\n\n";
  os << "[train]\n"
     << "seed = " << cfg.seed << "\n"
     << "trace_angles = " << b(cfg.trace_angles) << "\n"
     << "histogram_bins = " << cfg.histogram_bins << "\n";
  return os.str();
}

}  // namespace qgeom::train
