#include "pdgan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

namespace pdgan {
namespace {

std::string fmt(double v) { return canonical_number(v); }

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(Index v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ArgumentError("bad number '" + s + "'");
  }
  if (pos != s.size()) throw ArgumentError("bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ArgumentError("bad integer '" + s + "'");
  }
  if (pos != s.size()) throw ArgumentError("bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (s.empty() || s.back() == ',') throw ArgumentError("bad list '" + s + "'");
  return parts;
}

template <typename T>
std::string join(const std::vector<T>& v, std::string (*one)(T)) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += one(v[i]);
  }
  return s;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto num = [&f](const char* key, double RunConfig::*m) {
      f.push_back({key, [m](const RunConfig& c) { return fmt(c.*m); },
                   [m](RunConfig& c, const std::string& s) { c.*m = parse_double(s); }});
    };
    auto idx = [&f](const char* key, Index RunConfig::*m) {
      f.push_back({key, [m](const RunConfig& c) { return fmt(c.*m); },
                   [m](RunConfig& c, const std::string& s) { c.*m = parse_int(s); }});
    };
    f.push_back({"seed", [](const RunConfig& c) { return fmt(c.seed); },
                 [](RunConfig& c, const std::string& s) {
                   const long long v = parse_int(s);
                   if (v < 0) throw ArgumentError("seed must be non-negative");
                   c.seed = static_cast<std::uint64_t>(v);
                 }});
    idx("image-size", &RunConfig::image_size);
    idx("latent-dim", &RunConfig::latent_dim);
    idx("base-size", &RunConfig::base_size);
    f.push_back({"stage-channels",
                 [](const RunConfig& c) { return join<Index>(c.stage_channels, fmt); },
                 [](RunConfig& c, const std::string& s) {
                   c.stage_channels.clear();
                   for (const auto& p : split_commas(s)) c.stage_channels.push_back(parse_int(p));
                 }});
    f.push_back({"n-schedule", [](const RunConfig& c) { return join<int>(c.n_schedule, fmt); },
                 [](RunConfig& c, const std::string& s) {
                   c.n_schedule.clear();
                   for (const auto& p : split_commas(s))
                     c.n_schedule.push_back(static_cast<int>(parse_int(p)));
                 }});
    num("k", &RunConfig::k);
    idx("norm-hidden", &RunConfig::norm_hidden);
    idx("disc-base", &RunConfig::disc_base);
    num("eps-norm", &RunConfig::eps_norm);
    num("eps-div", &RunConfig::eps_div);
    num("w-adv", &RunConfig::w_adv);
    num("w-fm", &RunConfig::w_fm);
    num("w-rec", &RunConfig::w_rec);
    num("w-pdiv", &RunConfig::w_pdiv);
    f.push_back({"pdiv", [](const RunConfig& c) { return std::string(pdiv_mode_name(c.pdiv)); },
                 [](RunConfig& c, const std::string& s) { c.pdiv = pdiv_mode_from_name(s); }});
    f.push_back({"pdiv-gate",
                 [](const RunConfig& c) { return std::string(diversity_gate_name(c.pdiv_gate)); },
                 [](RunConfig& c, const std::string& s) {
                   c.pdiv_gate = diversity_gate_from_name(s);
                 }});
    num("lr", &RunConfig::lr);
    num("ttur", &RunConfig::ttur);
    num("beta1", &RunConfig::beta1);
    num("beta2", &RunConfig::beta2);
    num("adam-eps", &RunConfig::adam_eps);
    idx("batch", &RunConfig::batch);
    idx("iters", &RunConfig::iters);
    idx("corpus", &RunConfig::corpus);
    idx("samples", &RunConfig::samples);
    idx("topk", &RunConfig::topk);
    f.push_back({"prior-iters", [](const RunConfig& c) { return fmt(c.prior_iters); },
                 [](RunConfig& c, const std::string& s) {
                   c.prior_iters = static_cast<int>(parse_int(s));
                 }});
    idx("log-every", &RunConfig::log_every);
    idx("ckpt-every", &RunConfig::ckpt_every);
    f.push_back({"buckets",
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.buckets.size(); ++i) {
                     if (i) s += ',';
                     s += bucket_name(c.buckets[i]);
                   }
                   return s;
                 },
                 [](RunConfig& c, const std::string& s) {
                   c.buckets.clear();
                   for (const auto& p : split_commas(s)) c.buckets.push_back(bucket_from_name(p));
                 }});
    f.push_back({"out", [](const RunConfig& c) { return c.out; },
                 [](RunConfig& c, const std::string& s) {
                   if (s.empty()) throw ArgumentError("out must not be empty");
                   c.out = s;
                 }});
    return f;
  }();
  return table;
}

void apply_line(RunConfig& c, const std::string& key, const std::string& value) {
  for (const Field& f : fields())
    if (f.key == key) {
      f.set(c, value);
      return;
    }
  throw ArgumentError("unknown config key '" + key + "'");
}

}  // namespace

std::string canonical_number(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

const char* pdiv_mode_name(PdivMode m) {
  switch (m) {
    case PdivMode::On: return "on";
    case PdivMode::Off: return "off";
    case PdivMode::Cdl: return "cdl";
  }
  throw ArgumentError("bad pdiv mode");
}

PdivMode pdiv_mode_from_name(const std::string& s) {
  if (s == "on") return PdivMode::On;
  if (s == "off") return PdivMode::Off;
  if (s == "cdl") return PdivMode::Cdl;
  throw ArgumentError("pdiv mode must be on, off or cdl, got '" + s + "'");
}

const char* diversity_gate_name(DiversityGate g) {
  return g == DiversityGate::Hole ? "hole" : "background";
}

DiversityGate diversity_gate_from_name(const std::string& s) {
  if (s == "hole") return DiversityGate::Hole;
  if (s == "background") return DiversityGate::Background;
  throw ArgumentError("pdiv gate must be hole or background, got '" + s + "'");
}

void RunConfig::validate() const {
  generator_config().validate();
  loss_weights().validate();
  if (disc_base < 1) throw ArgumentError("disc-base must be positive");
  if (eps_norm <= 0) throw ArgumentError("eps-norm must be positive");
  if (lr <= 0) throw ArgumentError("lr must be positive");
  if (ttur <= 0) throw ArgumentError("ttur must be positive");
  if (beta1 < 0 || beta1 >= 1) throw ArgumentError("beta1 must lie in [0,1)");
  if (beta2 < 0 || beta2 >= 1) throw ArgumentError("beta2 must lie in [0,1)");
  if (adam_eps <= 0) throw ArgumentError("adam-eps must be positive");
  if (batch < 1) throw ArgumentError("batch must be positive");
  if (iters < 0) throw ArgumentError("iters must be non-negative");
  if (corpus < 1) throw ArgumentError("corpus must be positive");
  if (samples < 1) throw ArgumentError("samples must be positive");
  if (topk < 1) throw ArgumentError("topk must be positive");
  if (prior_iters < 1) throw ArgumentError("prior-iters must be positive");
  if (log_every < 1) throw ArgumentError("log-every must be positive");
  if (ckpt_every < 1) throw ArgumentError("ckpt-every must be positive");
  if (buckets.empty()) throw ArgumentError("buckets must not be empty");
  if (image_size % 16 != 0) throw ArgumentError("image-size must be a multiple of 16");
}

GeneratorConfig RunConfig::generator_config() const {
  GeneratorConfig g;
  g.latent_dim = latent_dim;
  g.base_h = base_size;
  g.base_w = base_size;
  g.stage_channels = stage_channels;
  g.n_schedule = n_schedule;
  g.out_h = image_size;
  g.out_w = image_size;
  g.norm_hidden = norm_hidden;
  g.k = k;
  g.eps = eps_norm;
  return g;
}

LossWeights RunConfig::loss_weights() const {
  LossWeights w;
  w.w_adv = w_adv;
  w.w_fm = w_fm;
  w.w_rec = w_rec;
  w.w_pdiv = w_pdiv;
  w.epsilon_div = eps_div;
  return w;
}

std::string serialize_config(const RunConfig& c) {
  std::string s;
  for (const Field& f : fields()) {
    s += f.key;
    s += '=';
    s += f.get(c);
    s += '\n';
  }
  return s;
}

RunConfig parse_config(std::istream& is) {
  RunConfig c;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError("config line without '=': " + line);
    const std::string key = line.substr(0, eq);
    if (!seen.insert(key).second) throw ArgumentError("repeated config key '" + key + "'");
    apply_line(c, key, line.substr(eq + 1));
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  std::stringstream ss(text);
  return parse_config(ss);
}

void write_config_file(const std::string& path, const RunConfig& c) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot open " + path + " for writing");
  os << serialize_config(c);
  if (!os) throw ArgumentError("config write failed: " + path);
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open " + path);
  return parse_config(is);
}

void apply_config_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ArgumentError("override must look like key=value, got '" + assignment + "'");
  apply_line(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

}  // namespace pdgan
