#include "sgdrf/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sgdrf/error.hpp"

namespace sgdrf {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"world", {"dim", "lower", "upper"}},
    {"model", {"K", "W", "beta", "gp_mean"}},
    {"kernel", {"variance", "lengthscales"}},
    {"inducing", {"counts"}},
    {"inference",
     {"n_s", "decay", "correct_bias", "samples", "iters_per_obs", "lr", "seed"}},
    {"vgp", {"noise_var", "iterations"}},
    {"metrics", {"epsilon"}},
    {"evaluation", {"checkpoint_stride"}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source)
      : tree_(tree), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError(source_ + ": " + key + ": " + what);
  }

  bool has(const std::string& key) const {
    return tree_.get_child_optional(pt::ptree::path_type(key, '.')).has_value();
  }

  std::string raw(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) fail(key, "missing required key");
    return trim(*v);
  }

  double real(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end || text.empty() || !std::isfinite(v))
      fail(key, "expected a finite number, got '" + text + "'");
    return v;
  }

  template <typename Int>
  Int integer(const std::string& key, const std::string& text) const {
    Int v = 0;
    const char* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end || text.empty())
      fail(key, "expected an integer, got '" + text + "'");
    return v;
  }

  double real(const std::string& key) const { return real(key, raw(key)); }
  double real(const std::string& key, double def) const {
    return has(key) ? real(key) : def;
  }
  template <typename Int>
  Int integer(const std::string& key, Int def) const {
    return has(key) ? integer<Int>(key, raw(key)) : def;
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

  std::vector<std::string> items(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (out.empty()) fail(key, "expected a comma-separated list");
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : items(key)) out.push_back(real(key, s));
    return out;
  }

  std::vector<int> ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : items(key)) out.push_back(integer<int>(key, s));
    return out;
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ValidationError(key + ": " + what);
  };
  check(world.dim() == 1 || world.dim() == 2, "world.dim", "must be 1 or 2");
  check(world.lower.size() == world.upper.size(), "world.upper",
        "must have as many entries as world.lower");
  for (std::size_t i = 0; i < world.dim(); ++i)
    check(world.lower[i] < world.upper[i], "world.upper",
          "must exceed world.lower in every dimension");
  check(K >= 1, "model.K", "must be >= 1");
  check(W >= 2, "model.W", "must be >= 2");
  check(beta.size() == 1 || beta.size() == static_cast<std::size_t>(W), "model.beta",
        "must have 1 or W entries");
  for (double b : beta) check(b > 0.0, "model.beta", "entries must be positive");
  check(kernel.variance > 0.0, "kernel.variance", "must be positive");
  check(kernel.lengthscales.size() == world.dim(), "kernel.lengthscales",
        "must have one entry per world dimension");
  for (double l : kernel.lengthscales)
    check(l > 0.0, "kernel.lengthscales", "entries must be positive");
  check(inducing_counts.size() == world.dim(), "inducing.counts",
        "must have one entry per world dimension");
  for (int c : inducing_counts) check(c >= 1, "inducing.counts", "entries must be >= 1");
  check(subsampler.n_s >= 1, "inference.n_s", "must be >= 1");
  check(subsampler.decay > 0.0 && subsampler.decay <= 1.0, "inference.decay",
        "must lie in (0, 1]");
  check(samples >= 2, "inference.samples", "must be >= 2");
  check(iters_per_obs >= 0, "inference.iters_per_obs", "must be >= 0");
  check(lr > 0.0, "inference.lr", "must be positive");
  check(vgp_noise_var > 0.0, "vgp.noise_var", "must be positive");
  check(vgp_iterations >= 0, "vgp.iterations", "must be >= 0");
  check(epsilon > 0.0, "metrics.epsilon", "must be positive");
  check(checkpoint_stride >= 1, "evaluation.checkpoint_stride", "must be >= 1");
}

ModelHyperparams RunConfig::hyperparams() const {
  validate();
  ModelHyperparams h;
  h.K = K;
  h.W = W;
  h.beta = beta.size() == 1
               ? Eigen::VectorXd::Constant(W, beta.front())
               : Eigen::Map<const Eigen::VectorXd>(beta.data(), W).eval();
  h.gp_mean = gp_mean;
  h.kernel = kernel;
  h.inducing = make_grid(world, inducing_counts);
  return h;
}

EngineConfig RunConfig::engine_config() const {
  EngineConfig e;
  e.subsampler = subsampler;
  e.gradient.samples = samples;
  e.gradient.control_variates = true;
  e.adam.learning_rate = lr;
  e.iters_per_obs = iters_per_obs;
  e.seed = seed;
  return e;
}

VgpConfig RunConfig::vgp_config() const {
  VgpConfig v;
  v.noise_var = vgp_noise_var;
  v.iterations = vgp_iterations;
  v.adam.learning_rate = lr;
  return v;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(source + ": line " + std::to_string(e.line()) + ": " +
                          e.message());
  }
  for (const auto& [section, keys] : tree) {
    auto known = kKnownKeys.find(section);
    if (known == kKnownKeys.end() || keys.empty())
      throw ValidationError(source + ": unknown section or top-level key '" +
                            section + "'");
    for (const auto& [key, value] : keys)
      if (!known->second.count(key))
        throw ValidationError(source + ": " + section + "." + key + ": unknown key");
  }

  const Reader r(tree, source);
  RunConfig c;
  std::vector<double> lower = r.reals("world.lower");
  std::vector<double> upper = r.reals("world.upper");
  const int dim = r.integer<int>("world.dim", static_cast<int>(lower.size()));
  if (dim != static_cast<int>(lower.size()) || dim != static_cast<int>(upper.size()))
    r.fail("world.dim", "does not match the lengths of world.lower/world.upper");
  if (dim < 1 || dim > 2) r.fail("world.dim", "must be 1 or 2");
  for (int i = 0; i < dim; ++i)
    if (!(lower[static_cast<std::size_t>(i)] < upper[static_cast<std::size_t>(i)]))
      r.fail("world.upper", "must exceed world.lower in every dimension");
  c.world = WorldBounds(std::move(lower), std::move(upper));

  c.K = r.integer<int>("model.K", r.raw("model.K"));
  c.W = r.integer<int>("model.W", r.raw("model.W"));
  if (r.has("model.beta")) c.beta = r.reals("model.beta");
  c.gp_mean = r.real("model.gp_mean", 0.0);
  c.kernel.variance = r.real("kernel.variance", 1.0);
  c.kernel.lengthscales = r.reals("kernel.lengthscales");
  c.inducing_counts = r.ints("inducing.counts");
  c.subsampler.n_s = r.integer<int>("inference.n_s", 64);
  c.subsampler.decay = r.real("inference.decay", 0.9);
  c.subsampler.correct_bias = r.boolean("inference.correct_bias", false);
  c.samples = r.integer<int>("inference.samples", 8);
  c.iters_per_obs = r.integer<int>("inference.iters_per_obs", 10);
  c.lr = r.real("inference.lr", 0.01);
  c.seed = r.integer<std::uint64_t>("inference.seed", std::uint64_t{0});
  c.vgp_noise_var = r.real("vgp.noise_var", 0.01);
  c.vgp_iterations = r.integer<int>("vgp.iterations", 1000);
  c.epsilon = r.real("metrics.epsilon", 1e-3);
  c.checkpoint_stride = r.integer<int>("evaluation.checkpoint_stride", 10);
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string dump_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[world]\n"
    << "dim = " << c.world.dim() << "\n"
    << "lower = " << join(c.world.lower) << "\n"
    << "upper = " << join(c.world.upper) << "\n\n"
    << "[model]\n"
    << "K = " << c.K << "\n"
    << "W = " << c.W << "\n"
    << "beta = " << join(c.beta) << "\n"
    << "gp_mean = " << fmt(c.gp_mean) << "\n\n"
    << "[kernel]\n"
    << "variance = " << fmt(c.kernel.variance) << "\n"
    << "lengthscales = " << join(c.kernel.lengthscales) << "\n\n"
    << "[inducing]\n"
    << "counts = " << join(c.inducing_counts) << "\n\n"
    << "[inference]\n"
    << "n_s = " << c.subsampler.n_s << "\n"
    << "decay = " << fmt(c.subsampler.decay) << "\n"
    << "correct_bias = " << (c.subsampler.correct_bias ? "true" : "false") << "\n"
    << "samples = " << c.samples << "\n"
    << "iters_per_obs = " << c.iters_per_obs << "\n"
    << "lr = " << fmt(c.lr) << "\n"
    << "seed = " << c.seed << "\n\n"
    << "[vgp]\n"
    << "noise_var = " << fmt(c.vgp_noise_var) << "\n"
    << "iterations = " << c.vgp_iterations << "\n\n"
    << "[metrics]\n"
    << "epsilon = " << fmt(c.epsilon) << "\n\n"
    << "[evaluation]\n"
    << "checkpoint_stride = " << c.checkpoint_stride << "\n";
  return o.str();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump_config(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sgdrf
