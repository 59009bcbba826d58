#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "certmark/error.hpp"
#include "certmark/hashing.hpp"

namespace certmark::cli {

FederatedConfig RunConfig::federated_config() const {
  FederatedConfig f = federated;
  f.seed = seed;
  f.threads = threads;
  return f;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  const auto& da = a.dataset;
  const auto& db = b.dataset;
  return a.seed == b.seed && a.threads == b.threads && da.name == db.name && da.root == db.root &&
         da.train_counts == db.train_counts && da.test_counts == db.test_counts &&
         da.train_fraction == db.train_fraction && da.partition == db.partition && a.model == b.model &&
         a.federated == b.federated && a.watermark == b.watermark && a.attack == b.attack && a.attacks == b.attacks &&
         a.evaluation.mode == b.evaluation.mode && a.evaluation.radii == b.evaluation.radii &&
         a.evaluation.threshold == b.evaluation.threshold;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct LineError {
  std::string source;
  std::size_t line;
  [[noreturn]] void operator()(const std::string& message) const {
    fail(ErrorKind::kConfig, source + ":" + std::to_string(line) + ": " + message);
  }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

// Removes a trailing comment, ignoring '#' inside strings.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, const LineError& err) : text_(text), err_(err) {}

  TomlValue parse() {
    skip_ws();
    TomlValue v;
    if (peek() == '[') {
      v = parse_array();
    } else {
      v = std::visit([](auto&& x) -> TomlValue { return x; }, parse_scalar());
    }
    skip_ws();
    if (pos_ != text_.size()) err_("unexpected trailing text '" + std::string(text_.substr(pos_)) + "'");
    return v;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::vector<TomlScalar> parse_array() {
    ++pos_;
    std::vector<TomlScalar> out;
    while (true) {
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      if (peek() == '\0') err_("unterminated array");
      out.push_back(parse_scalar());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        err_("expected ',' or ']' in array");
      }
    }
  }

  TomlScalar parse_scalar() {
    if (peek() == '"') return parse_string();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    const std::string_view tok = text_.substr(start, pos_ - start);
    if (tok.empty()) err_("missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    const bool integral = tok.find_first_of(".eE") == std::string_view::npos;
    const char* first = tok.data() + (tok.front() == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (integral) {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return v;
    } else {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return v;
    }
    err_("cannot parse value '" + std::string(tok) + "'");
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) err_("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= text_.size()) err_("unterminated escape");
      switch (const char e = text_[pos_++]) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: err_(std::string("unsupported escape '\\") + e + "'");
      }
    }
  }

  std::string_view text_;
  LineError err_;
  std::size_t pos_ = 0;
};

}  // namespace

namespace {

TomlTable parse_toml_lines(const std::string& text, const std::string& source, std::vector<std::size_t>* lines) {
  TomlTable table;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const LineError err{source, lineno};
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') err("malformed section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty() || !std::all_of(name.begin(), name.end(), is_key_char)) {
        err("invalid section name '" + std::string(name) + "'");
      }
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) err("expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_key_char)) {
      err("invalid key '" + std::string(key) + "'");
    }
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (std::any_of(table.begin(), table.end(), [&](const auto& kv) { return kv.first == full; })) {
      err("duplicate key '" + full + "'");
    }
    table.emplace_back(full, ValueParser(line.substr(eq + 1), err).parse());
    if (lines) lines->push_back(lineno);
  }
  return table;
}

}  // namespace

TomlTable parse_toml(const std::string& text, const std::string& source) {
  return parse_toml_lines(text, source, nullptr);
}

// ---------------------------------------------------------------------------
// Field bindings

namespace {

[[noreturn]] void type_error(const std::string& key, const char* expected) {
  fail(ErrorKind::kConfig, key + ": expected " + expected);
}

std::int64_t as_int(const TomlScalar& v, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  type_error(key, "an integer");
}

std::size_t as_count(const TomlScalar& v, const std::string& key) {
  const auto i = as_int(v, key);
  if (i < 0) fail(ErrorKind::kConfig, key + ": must be non-negative");
  return static_cast<std::size_t>(i);
}

double as_real(const TomlScalar& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  type_error(key, "a number");
}

const std::string& as_string(const TomlScalar& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  type_error(key, "a string");
}

bool as_bool(const TomlScalar& v, const std::string& key) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  type_error(key, "true or false");
}

// Result is consumed within the caller's full-expression.
TomlScalar scalar(const TomlValue& v, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  type_error(key, "a single value, not an array");
}

const std::vector<TomlScalar>& array(const TomlValue& v, const std::string& key) {
  if (const auto* a = std::get_if<std::vector<TomlScalar>>(&v)) return *a;
  type_error(key, "an array");
}

std::string fmt_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_real(float v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out.push_back(c);
    }
  }
  return out + "\"";
}

template <typename T>
std::string fmt_list(const std::vector<T>& values, const std::function<std::string(const T&)>& f) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + f(values[i]);
  return out + "]";
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const TomlValue&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field count_field(std::string key, Member member) {
  return {key,
          [=](RunConfig& c, const TomlValue& v) { std::invoke(member, c) = as_count(scalar(v, key), key); },
          [=](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <typename Member>
Field real_field(std::string key, Member member) {
  return {key,
          [=](RunConfig& c, const TomlValue& v) {
            auto& ref = std::invoke(member, c);
            ref = static_cast<std::remove_reference_t<decltype(ref)>>(as_real(scalar(v, key), key));
          },
          [=](const RunConfig& c) { return fmt_real(std::invoke(member, c)); }};
}

template <typename Member>
Field bool_field(std::string key, Member member) {
  return {key, [=](RunConfig& c, const TomlValue& v) { std::invoke(member, c) = as_bool(scalar(v, key), key); },
          [=](const RunConfig& c) { return std::string(std::invoke(member, c) ? "true" : "false"); }};
}

template <typename Member>
Field string_field(std::string key, Member member) {
  return {key, [=](RunConfig& c, const TomlValue& v) { std::invoke(member, c) = as_string(scalar(v, key), key); },
          [=](const RunConfig& c) { return fmt_string(std::invoke(member, c)); }};
}

// Enum stored through its parse/to_string pair; parse errors gain the key.
template <typename Member, typename Parse>
Field enum_field(std::string key, Member member, Parse parse) {
  return {key,
          [=](RunConfig& c, const TomlValue& v) {
            try {
              std::invoke(member, c) = parse(as_string(scalar(v, key), key));
            } catch (const Error& e) {
              fail(ErrorKind::kConfig, key + ": " + e.message());
            }
          },
          [=](const RunConfig& c) { return fmt_string(std::string(to_string(std::invoke(member, c)))); }};
}

template <typename Member>
Field count_list_field(std::string key, Member member) {
  return {key,
          [=](RunConfig& c, const TomlValue& v) {
            auto& out = std::invoke(member, c);
            out.clear();
            for (const auto& x : array(v, key)) out.push_back(as_count(x, key));
          },
          [=](const RunConfig& c) {
            return fmt_list<std::size_t>(std::invoke(member, c), [](const std::size_t& x) { return std::to_string(x); });
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = RunConfig;
    std::vector<Field> f;
    f.push_back({"seed",
                 [](C& c, const TomlValue& v) {
                   const auto i = as_int(scalar(v, "seed"), "seed");
                   if (i < 0) fail(ErrorKind::kConfig, "seed: must be non-negative");
                   c.seed = static_cast<std::uint64_t>(i);
                 },
                 [](const C& c) { return std::to_string(c.seed); }});
    f.push_back(count_field("threads", [](auto& c) -> auto& { return c.threads; }));

    f.push_back(string_field("dataset.name", [](auto& c) -> auto& { return c.dataset.name; }));
    f.push_back(string_field("dataset.root", [](auto& c) -> auto& { return c.dataset.root; }));
    f.push_back(count_list_field("dataset.train_counts", [](auto& c) -> auto& { return c.dataset.train_counts; }));
    f.push_back(count_list_field("dataset.test_counts", [](auto& c) -> auto& { return c.dataset.test_counts; }));
    f.push_back(real_field("dataset.train_fraction", [](auto& c) -> auto& { return c.dataset.train_fraction; }));
    f.push_back(enum_field("dataset.partition", [](auto& c) -> auto& { return c.dataset.partition; },
                           parse_partition_mode));

    f.push_back(enum_field("model.conv", [](auto& c) -> auto& { return c.model.conv; }, parse_conv_type));
    f.push_back(count_field("model.ensemble_size", [](auto& c) -> auto& { return c.model.ensemble_size; }));

    f.push_back(count_field("federated.clients", [](auto& c) -> auto& { return c.federated.clients; }));
    f.push_back(count_field("federated.watermarked_clients",
                            [](auto& c) -> auto& { return c.federated.watermarked_clients; }));
    f.push_back(count_field("federated.rounds", [](auto& c) -> auto& { return c.federated.rounds; }));
    f.push_back(real_field("federated.selection_fraction",
                           [](auto& c) -> auto& { return c.federated.selection_fraction; }));
    f.push_back(real_field("federated.lr", [](auto& c) -> auto& { return c.federated.lr; }));
    f.push_back(count_field("federated.local_epochs", [](auto& c) -> auto& { return c.federated.local_epochs; }));
    f.push_back(count_field("federated.batch_size", [](auto& c) -> auto& { return c.federated.batch_size; }));
    f.push_back(enum_field("federated.aggregator", [](auto& c) -> auto& { return c.federated.aggregator.kind; },
                           parse_aggregator));
    f.push_back(count_field("federated.trim", [](auto& c) -> auto& { return c.federated.aggregator.trim; }));
    f.push_back(count_field("federated.byzantine", [](auto& c) -> auto& { return c.federated.aggregator.byzantine; }));
    f.push_back(real_field("federated.malicious_fraction",
                           [](auto& c) -> auto& { return c.federated.malicious_fraction; }));
    f.push_back({"federated.wrong_label",
                 [](C& c, const TomlValue& v) {
                   c.federated.wrong_label = static_cast<int>(as_int(scalar(v, "federated.wrong_label"), "federated.wrong_label"));
                 },
                 [](const C& c) { return std::to_string(c.federated.wrong_label); }});
    f.push_back(real_field("federated.cwg_lr", [](auto& c) -> auto& { return c.federated.cwg_lr; }));
    f.push_back(count_field("federated.cwg_epochs", [](auto& c) -> auto& { return c.federated.cwg_epochs; }));
    f.push_back(bool_field("federated.random_watermark", [](auto& c) -> auto& { return c.federated.random_watermark; }));
    f.push_back(real_field("federated.er_edge_probability",
                           [](auto& c) -> auto& { return c.federated.er_edge_probability; }));

    f.push_back(count_field("watermark.n_w", [](auto& c) -> auto& { return c.watermark.n_w; }));
    f.push_back({"watermark.target_label",
                 [](C& c, const TomlValue& v) {
                   c.watermark.target_label =
                       static_cast<int>(as_int(scalar(v, "watermark.target_label"), "watermark.target_label"));
                 },
                 [](const C& c) { return std::to_string(c.watermark.target_label); }});
    f.push_back(real_field("watermark.fraction", [](auto& c) -> auto& { return c.watermark.watermark_fraction; }));

    f.push_back({"attack.kinds",
                 [](C& c, const TomlValue& v) {
                   c.attacks.clear();
                   for (const auto& x : array(v, "attack.kinds")) {
                     try {
                       c.attacks.push_back(parse_attack(as_string(x, "attack.kinds")));
                     } catch (const Error& e) {
                       fail(ErrorKind::kConfig, std::string("attack.kinds: ") + e.message());
                     }
                   }
                 },
                 [](const C& c) {
                   return fmt_list<AttackKind>(c.attacks,
                                               [](const AttackKind& k) { return fmt_string(std::string(to_string(k))); });
                 }});
    f.push_back(real_field("attack.data_fraction", [](auto& c) -> auto& { return c.attack.attacker_data_fraction; }));
    f.push_back(count_field("attack.epochs", [](auto& c) -> auto& { return c.attack.epochs; }));
    f.push_back(real_field("attack.lr", [](auto& c) -> auto& { return c.attack.lr; }));
    f.push_back(count_field("attack.shadow_epochs", [](auto& c) -> auto& { return c.attack.shadow_epochs; }));
    f.push_back(count_field("attack.perturbed_layers", [](auto& c) -> auto& { return c.attack.perturbed_layers; }));
    f.push_back(real_field("attack.ma_drop_budget", [](auto& c) -> auto& { return c.attack.ma_drop_budget; }));
    f.push_back(count_field("attack.watermark_samples", [](auto& c) -> auto& { return c.attack.watermark_samples; }));
    f.push_back(count_field("attack.batch_size", [](auto& c) -> auto& { return c.attack.batch_size; }));

    f.push_back(enum_field("evaluation.mode", [](auto& c) -> auto& { return c.evaluation.mode; },
                           parse_watermark_mode));
    f.push_back({"evaluation.radii",
                 [](C& c, const TomlValue& v) {
                   c.evaluation.radii.clear();
                   for (const auto& x : array(v, "evaluation.radii"))
                     c.evaluation.radii.push_back(static_cast<int>(as_count(x, "evaluation.radii")));
                 },
                 [](const C& c) {
                   return fmt_list<int>(c.evaluation.radii, [](const int& r) { return std::to_string(r); });
                 }});
    f.push_back(real_field("evaluation.threshold", [](auto& c) -> auto& { return c.evaluation.threshold; }));
    return f;
  }();
  return table;
}

struct Profile {
  const char* name;
  std::vector<std::size_t> train, test;
  bool halve;
};

const std::vector<Profile>& profiles() {
  // Per-class train/test counts in class-index order. MUTAG's raw labels are
  // {-1, 1}; the larger class (raw 1) is index 1.
  static const std::vector<Profile> p{
      {"MUTAG", {42, 83}, {21, 42}, true},
      {"PROTEINS", {440, 300}, {220, 150}, false},
      {"DD", {330, 303}, {165, 152}, false},
      {"COLLAB", {517, 1589, 1215}, {258, 794, 608}, false},
  };
  return p;
}

}  // namespace

void apply_dataset_profile(RunConfig& config) {
  for (const auto& p : profiles()) {
    if (config.dataset.name != p.name) continue;
    config.dataset.train_counts = p.train;
    config.dataset.test_counts = p.test;
    if (p.halve) {
      config.model.ensemble_size = 2;
      config.federated.watermarked_clients = 5;
    }
  }
}

void apply_scale(RunConfig& config, const std::string& scale) {
  if (scale.empty() || scale == "full") return;
  if (scale != "ci") fail(ErrorKind::kConfig, "--scale: unknown preset '" + scale + "' (expected ci or full)");
  if (config.dataset.name != "MUTAG") {
    fail(ErrorKind::kConfig, "--scale ci runs MUTAG only (dataset.name is '" + config.dataset.name + "')");
  }
  config.federated.clients = 10;
  config.federated.rounds = 40;
  config.federated.watermarked_clients = std::min(config.federated.watermarked_clients, config.federated.clients);
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  std::vector<std::size_t> lines;
  const auto table = parse_toml_lines(text, source, &lines);
  RunConfig config;
  for (const auto& [key, value] : table) {
    if (key == "dataset.name") config.dataset.name = as_string(scalar(value, key), key);
  }
  apply_dataset_profile(config);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& [key, value] = table[i];
    const std::string where = source + ":" + std::to_string(lines[i]) + ": ";
    const auto& fs = fields();
    const auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.key == key; });
    if (it == fs.end()) fail(ErrorKind::kConfig, where + "unknown key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const Error& e) {
      fail(e.kind(), where + e.message());
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string emit_run_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string key = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += key + " = " + f.get(config) + "\n";
  }
  return out;
}

// Thread count does not change results, so it is left out of the hash.
std::string config_hash(const RunConfig& config) {
  RunConfig c = config;
  c.threads = 1;
  return sha256_hex(emit_run_config(c));
}

void validate(const RunConfig& c) {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::kConfig, msg); };
  check(!c.dataset.name.empty(), "dataset.name: must not be empty");
  check(c.dataset.train_fraction > 0.0 && c.dataset.train_fraction < 1.0, "dataset.train_fraction: must lie in (0, 1)");
  check(c.threads >= 1, "threads: must be at least 1");
  check(c.model.ensemble_size >= 1, "model.ensemble_size: must be positive");
  const auto& f = c.federated;
  check(f.clients >= 1, "federated.clients: must be positive");
  check(f.watermarked_clients <= f.clients, "federated.watermarked_clients: exceeds federated.clients");
  check(f.selection_fraction > 0.0 && f.selection_fraction <= 1.0, "federated.selection_fraction: must lie in (0, 1]");
  check(f.lr >= 0.0f, "federated.lr: must be non-negative");
  check(f.cwg_lr >= 0.0f, "federated.cwg_lr: must be non-negative");
  check(f.batch_size >= 1, "federated.batch_size: must be positive");
  check(f.malicious_fraction >= 0.0 && f.malicious_fraction <= 1.0, "federated.malicious_fraction: must lie in [0, 1]");
  check(f.er_edge_probability >= 0.0 && f.er_edge_probability <= 1.0,
        "federated.er_edge_probability: must lie in [0, 1]");
  check(c.watermark.n_w >= 2, "watermark.n_w: must be at least 2");
  check(c.watermark.target_label >= 0, "watermark.target_label: must be non-negative");
  check(c.watermark.watermark_fraction > 0.0 && c.watermark.watermark_fraction <= 1.0,
        "watermark.fraction: must lie in (0, 1]");
  const auto& a = c.attack;
  check(a.attacker_data_fraction > 0.0 && a.attacker_data_fraction <= 1.0, "attack.data_fraction: must lie in (0, 1]");
  check(a.perturbed_layers <= kLayersPerSubmodel * c.model.ensemble_size,
        "attack.perturbed_layers: exceeds the model's " + std::to_string(kLayersPerSubmodel * c.model.ensemble_size) +
            " layers");
  check(a.batch_size >= 1, "attack.batch_size: must be positive");
  check(a.ma_drop_budget >= 0.0, "attack.ma_drop_budget: must be non-negative");
  check(c.evaluation.threshold >= 0.0 && c.evaluation.threshold <= 1.0, "evaluation.threshold: must lie in [0, 1]");
  check(std::is_sorted(c.evaluation.radii.begin(), c.evaluation.radii.end()), "evaluation.radii: must be ascending");
}

std::filesystem::path dataset_directory(const RunConfig& config) {
  std::filesystem::path root = config.dataset.root;
  if (root.empty()) {
    const char* env = std::getenv(kDataRootEnv);
    root = env && *env ? std::filesystem::path(env) : std::filesystem::path("data");
  }
  return root / config.dataset.name;
}

}  // namespace certmark::cli
