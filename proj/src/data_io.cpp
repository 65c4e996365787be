#include "sgdrf/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sgdrf/error.hpp"

namespace sgdrf {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Data lines of a CSV with provenance comments stripped, keeping line numbers.
struct CsvLines {
  std::vector<std::pair<std::size_t, std::string>> lines;
};

CsvLines csv_lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  CsvLines out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.lines.emplace_back(no, line);
  }
  if (out.lines.empty()) throw IoError(path.string() + ": missing header line");
  return out;
}

[[noreturn]] void bad(const fs::path& path, std::size_t line, const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_real(const fs::path& path, std::size_t line, const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end || !std::isfinite(v))
    bad(path, line, "non-numeric field '" + s + "'");
  return v;
}

std::int64_t parse_count(const fs::path& path, std::size_t line, const std::string& s) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end)
    bad(path, line, "non-numeric count '" + s + "'");
  if (v < 0) bad(path, line, "negative count " + s);
  return v;
}

// Number of leading coordinate columns "x1", "x2" in a header.
int coordinate_columns(const fs::path& path, std::size_t line,
                       const std::vector<std::string>& header) {
  int d = 0;
  while (d < static_cast<int>(header.size()) &&
         header[static_cast<std::size_t>(d)] == "x" + std::to_string(d + 1))
    ++d;
  if (d < 1 || d > 2) bad(path, line, "header must start with x1 or x1,x2");
  return d;
}

void expect_columns(const fs::path& path, std::size_t line,
                    const std::vector<std::string>& header, int from,
                    const std::string& prefix) {
  for (std::size_t i = static_cast<std::size_t>(from); i < header.size(); ++i)
    if (header[i] != prefix + std::to_string(i - static_cast<std::size_t>(from)))
      bad(path, line, "unexpected header column '" + header[i] + "', expected '" +
                          prefix + std::to_string(i - static_cast<std::size_t>(from)) + "'");
}

std::string provenance(const std::string& config_hash) {
  return config_hash.empty() ? "" : "# config_hash=" + config_hash + "\n";
}

void append_coords(std::string& out, const Location& x) {
  for (std::size_t d = 0; d < x.dim(); ++d) {
    if (d) out += ',';
    out += g17(x[d]);
  }
}

std::string coord_header(std::size_t d) {
  return d == 1 ? "x1" : "x1,x2";
}

// Binary helpers.
template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_vec(std::string& out, const Eigen::VectorXd& v) {
  out.append(reinterpret_cast<const char*>(v.data()),
             static_cast<std::size_t>(v.size()) * sizeof(double));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, fs::path path)
      : bytes_(bytes), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  Eigen::VectorXd vec(std::int64_t n) {
    if (n < 0) corrupt("negative length");
    need(static_cast<std::size_t>(n) * sizeof(double));
    Eigen::VectorXd v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, static_cast<std::size_t>(n) * sizeof(double));
    pos_ += static_cast<std::size_t>(n) * sizeof(double);
    return v;
  }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

  [[noreturn]] void corrupt(const std::string& what) const {
    throw IoError("corrupt checkpoint " + path_.string() + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) corrupt("truncated file");
  }
  const std::string& bytes_;
  fs::path path_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[8] = {'S', 'G', 'D', 'R', 'F', 'C', 'K', 'P'};
constexpr char kEndMarker[8] = {'E', 'N', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kKindSgdrf = 1;
constexpr std::uint32_t kKindVgp = 2;

std::uint64_t parse_hash(const std::string& hex) {
  if (hex.empty()) return 0;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
  if (ec != std::errc() || p != hex.data() + hex.size())
    throw ValidationError("invalid config hash '" + hex + "'");
  return v;
}

std::string format_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

Dataset read_dataset(const fs::path& path) {
  const CsvLines csv = csv_lines(path);
  const auto& [hline, htext] = csv.lines.front();
  const std::vector<std::string> header = split(htext);
  Dataset data;
  data.dim = coordinate_columns(path, hline, header);
  data.W = static_cast<int>(header.size()) - data.dim;
  if (data.W < 1) bad(path, hline, "header declares no count columns");
  expect_columns(path, hline, header, data.dim, "c");

  const std::size_t width = header.size();
  data.records.reserve(csv.lines.size() - 1);
  for (std::size_t li = 1; li < csv.lines.size(); ++li) {
    const auto& [no, text] = csv.lines[li];
    const std::vector<std::string> fields = split(text);
    if (fields.size() != width)
      bad(path, no, "ragged row: expected " + std::to_string(width) + " fields (" +
                        std::to_string(data.dim) + " coordinates + " +
                        std::to_string(data.W) + " counts), got " +
                        std::to_string(fields.size()));
    double coords[2] = {0.0, 0.0};
    for (int d = 0; d < data.dim; ++d)
      coords[d] = parse_real(path, no, fields[static_cast<std::size_t>(d)]);
    ObservationRecord rec;
    rec.location = Location(std::span<const double>(coords, static_cast<std::size_t>(data.dim)));
    rec.num_categories = data.W;
    for (int w = 0; w < data.W; ++w) {
      const std::int64_t n =
          parse_count(path, no, fields[static_cast<std::size_t>(data.dim + w)]);
      if (n > 0) rec.counts.push_back({w, n});
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

void write_dataset(const Dataset& data, const fs::path& path,
                   const std::string& config_hash) {
  std::string out = provenance(config_hash);
  out += coord_header(static_cast<std::size_t>(data.dim));
  for (int w = 0; w < data.W; ++w) out += ",c" + std::to_string(w);
  out += '\n';
  for (const auto& rec : data.records) {
    require(static_cast<int>(rec.location.dim()) == data.dim && rec.num_categories == data.W,
            "write_dataset: record dimensions do not match the dataset header");
    append_coords(out, rec.location);
    std::size_t next = 0;
    for (int w = 0; w < data.W; ++w) {
      out += ',';
      if (next < rec.counts.size() && rec.counts[next].category == w) {
        out += std::to_string(rec.counts[next].count);
        ++next;
      } else {
        out += '0';
      }
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Location> read_locations(const fs::path& path) {
  const CsvLines csv = csv_lines(path);
  const auto& [hline, htext] = csv.lines.front();
  const std::vector<std::string> header = split(htext);
  const int d = coordinate_columns(path, hline, header);
  if (static_cast<int>(header.size()) != d) bad(path, hline, "expected only x1[,x2] columns");
  std::vector<Location> out;
  for (std::size_t li = 1; li < csv.lines.size(); ++li) {
    const auto& [no, text] = csv.lines[li];
    const auto fields = split(text);
    if (static_cast<int>(fields.size()) != d) bad(path, no, "ragged row");
    double c[2] = {0.0, 0.0};
    for (int i = 0; i < d; ++i) c[i] = parse_real(path, no, fields[static_cast<std::size_t>(i)]);
    out.emplace_back(std::span<const double>(c, static_cast<std::size_t>(d)));
  }
  return out;
}

void write_predictions(const PredictiveDistribution& pred, const fs::path& path,
                       const std::string& config_hash, const std::string& model_kind) {
  require(static_cast<std::size_t>(pred.p_obs.rows()) == pred.locations.size(),
          "write_predictions: row count does not match locations");
  std::string out = provenance(config_hash);
  if (!model_kind.empty()) out += "# model=" + model_kind + "\n";
  const std::size_t d = pred.locations.empty() ? 1 : pred.locations.front().dim();
  out += coord_header(d);
  for (Eigen::Index w = 0; w < pred.p_obs.cols(); ++w) out += ",p" + std::to_string(w);
  out += '\n';
  for (std::size_t i = 0; i < pred.locations.size(); ++i) {
    append_coords(out, pred.locations[i]);
    for (Eigen::Index w = 0; w < pred.p_obs.cols(); ++w)
      out += "," + g17(pred.p_obs(static_cast<Eigen::Index>(i), w));
    out += '\n';
  }
  write_file_atomic(path, out);
}

PredictiveDistribution read_predictions(const fs::path& path) {
  const CsvLines csv = csv_lines(path);
  const auto& [hline, htext] = csv.lines.front();
  const auto header = split(htext);
  const int d = coordinate_columns(path, hline, header);
  expect_columns(path, hline, header, d, "p");
  const auto W = static_cast<Eigen::Index>(header.size()) - d;
  PredictiveDistribution pred;
  pred.p_obs.resize(static_cast<Eigen::Index>(csv.lines.size() - 1), W);
  pred.theta.resize(pred.p_obs.rows(), 0);
  for (std::size_t li = 1; li < csv.lines.size(); ++li) {
    const auto& [no, text] = csv.lines[li];
    const auto fields = split(text);
    if (fields.size() != header.size()) bad(path, no, "ragged row");
    double c[2] = {0.0, 0.0};
    for (int i = 0; i < d; ++i) c[i] = parse_real(path, no, fields[static_cast<std::size_t>(i)]);
    pred.locations.emplace_back(std::span<const double>(c, static_cast<std::size_t>(d)));
    for (Eigen::Index w = 0; w < W; ++w) {
      const double p = parse_real(path, no, fields[static_cast<std::size_t>(d + w)]);
      if (p < 0.0) bad(path, no, "negative probability");
      pred.p_obs(static_cast<Eigen::Index>(li - 1), w) = p;
    }
  }
  return pred;
}

void write_theta(const PredictiveDistribution& pred, const fs::path& path,
                 const std::string& config_hash) {
  std::string out = provenance(config_hash);
  const std::size_t d = pred.locations.empty() ? 1 : pred.locations.front().dim();
  out += coord_header(d);
  for (Eigen::Index k = 0; k < pred.theta.cols(); ++k) out += ",theta" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < pred.locations.size(); ++i) {
    append_coords(out, pred.locations[i]);
    for (Eigen::Index k = 0; k < pred.theta.cols(); ++k)
      out += "," + g17(pred.theta(static_cast<Eigen::Index>(i), k));
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_phi(const PhiMatrix& phi, const fs::path& path, const std::string& config_hash) {
  std::string out = provenance(config_hash);
  for (Eigen::Index w = 0; w < phi.categories(); ++w) {
    if (w) out += ',';
    out += "c" + std::to_string(w);
  }
  out += '\n';
  for (Eigen::Index k = 0; k < phi.communities(); ++k) {
    for (Eigen::Index w = 0; w < phi.categories(); ++w) {
      if (w) out += ',';
      out += g17(phi.rows()(k, w));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_metrics(const std::vector<PklSummary>& summaries, const fs::path& path,
                   double epsilon, const std::string& config_hash,
                   const std::string& model_kind) {
  std::string out = "# epsilon=" + g17(epsilon) + "\n" + provenance(config_hash);
  if (!model_kind.empty()) out += "# model=" + model_kind + "\n";
  out += "checkpoint_t,coverage_fraction,q25,median,q75\n";
  for (const auto& s : summaries) {
    out += std::to_string(s.checkpoint_t) + "," + g17(s.coverage_fraction) + "," +
           g17(s.q25) + "," + g17(s.median) + "," + g17(s.q75) + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<PklSummary> read_metrics(const fs::path& path) {
  const CsvLines csv = csv_lines(path);
  const auto& [hline, htext] = csv.lines.front();
  if (htext != "checkpoint_t,coverage_fraction,q25,median,q75")
    bad(path, hline, "unexpected metrics header");
  std::vector<PklSummary> out;
  for (std::size_t li = 1; li < csv.lines.size(); ++li) {
    const auto& [no, text] = csv.lines[li];
    const auto f = split(text);
    if (f.size() != 5) bad(path, no, "ragged row");
    PklSummary s;
    s.checkpoint_t = static_cast<std::size_t>(parse_count(path, no, f[0]));
    s.coverage_fraction = parse_real(path, no, f[1]);
    s.q25 = parse_real(path, no, f[2]);
    s.median = parse_real(path, no, f[3]);
    s.q75 = parse_real(path, no, f[4]);
    out.push_back(s);
  }
  return out;
}

void write_community_map(const CommunityMap& map, int K, const fs::path& csv_path,
                         const std::string& config_hash) {
  require(!map.counts.empty(), "write_community_map: empty grid");
  const int nx = map.counts[0];
  const int ny = map.counts.size() > 1 ? map.counts[1] : 1;
  require(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) == map.labels.size(),
          "write_community_map: label count does not match grid counts");
  std::string csv = provenance(config_hash);
  std::string pgm = "P2\n";
  if (!config_hash.empty()) pgm += "# config_hash=" + config_hash + "\n";
  pgm += std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  const int levels = std::max(K - 1, 1);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const int label = map.labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(nx) +
                                   static_cast<std::size_t>(x)];
      if (x) {
        csv += ',';
        pgm += ' ';
      }
      csv += std::to_string(label);
      pgm += std::to_string(label * 255 / levels);
    }
    csv += '\n';
    pgm += '\n';
  }
  write_file_atomic(csv_path, csv);
  fs::path pgm_path = csv_path;
  pgm_path.replace_extension(".pgm");
  write_file_atomic(pgm_path, pgm);
}

CommunityMap read_community_map(const fs::path& csv_path) {
  const CsvLines csv = csv_lines(csv_path);
  CommunityMap map;
  int nx = -1;
  for (const auto& [no, text] : csv.lines) {
    const auto f = split(text);
    if (nx < 0) nx = static_cast<int>(f.size());
    if (static_cast<int>(f.size()) != nx) bad(csv_path, no, "ragged row");
    for (const auto& s : f)
      map.labels.push_back(static_cast<int>(parse_count(csv_path, no, s)));
  }
  const int ny = static_cast<int>(csv.lines.size());
  map.counts = ny == 1 ? std::vector<int>{nx} : std::vector<int>{nx, ny};
  return map;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  if (const auto* s = std::get_if<SgdrfCheckpoint>(&ckpt)) {
    const Eigen::VectorXd params = s->state.flat();
    require(s->optimizer.first_moment.size() == params.size() &&
                s->optimizer.second_moment.size() == params.size(),
            "save_checkpoint: optimizer moments do not match the state");
    put<std::uint32_t>(out, kKindSgdrf);
    put<std::uint64_t>(out, parse_hash(s->config_hash));
    put<std::int64_t>(out, s->state.K());
    put<std::int64_t>(out, s->state.m());
    put<std::int64_t>(out, s->state.W());
    put<std::uint64_t>(out, s->state.step_count);
    const OptimizerState& o = s->optimizer;
    put<std::uint64_t>(out, o.step);
    put<std::uint64_t>(out, o.skipped);
    put<double>(out, o.config.learning_rate);
    put<double>(out, o.config.beta1);
    put<double>(out, o.config.beta2);
    put<double>(out, o.config.epsilon);
    put<std::int64_t>(out, params.size());
    put_vec(out, params);
    put_vec(out, o.first_moment);
    put_vec(out, o.second_moment);
  } else {
    const auto& v = std::get<VgpCheckpoint>(ckpt);
    put<std::uint32_t>(out, kKindVgp);
    put<std::uint64_t>(out, parse_hash(v.config_hash));
    put<std::int64_t>(out, v.state.W());
    put<std::int64_t>(out, v.state.m());
    const Eigen::Index P = GaussianVarParams::param_count(v.state.m());
    Eigen::VectorXd block(P);
    for (int c = 0; c < v.state.W(); ++c) {
      put<double>(out, v.state.noise_var[static_cast<std::size_t>(c)]);
      v.state.categories[static_cast<std::size_t>(c)].pack(block.data());
      put_vec(out, block);
    }
  }
  out.append(kEndMarker, sizeof(kEndMarker));
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const std::string bytes = read_file(path);
  ByteReader in(bytes, path);
  if (in.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    in.corrupt("bad magic (not a checkpoint file)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw IoError("checkpoint " + path.string() + " has version " +
                  std::to_string(version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  const auto kind = in.get<std::uint32_t>();
  const std::string hash = format_hash(in.get<std::uint64_t>());
  Checkpoint result;
  if (kind == kKindSgdrf) {
    const auto K = in.get<std::int64_t>();
    const auto m = in.get<std::int64_t>();
    const auto W = in.get<std::int64_t>();
    if (K < 1 || m < 1 || W < 2 || K > (1 << 20) || m > (1 << 20) || W > (1 << 28))
      in.corrupt("implausible dimensions");
    SgdrfCheckpoint s;
    s.config_hash = hash;
    s.state.step_count = in.get<std::uint64_t>();
    s.optimizer.step = in.get<std::uint64_t>();
    s.optimizer.skipped = in.get<std::uint64_t>();
    s.optimizer.config.learning_rate = in.get<double>();
    s.optimizer.config.beta1 = in.get<double>();
    s.optimizer.config.beta2 = in.get<double>();
    s.optimizer.config.epsilon = in.get<double>();
    const auto P = in.get<std::int64_t>();
    if (P != VariationalState::param_count(static_cast<int>(K), m, W))
      in.corrupt("parameter count does not match dimensions");
    const Eigen::VectorXd params = in.vec(P);
    s.optimizer.first_moment = in.vec(P);
    s.optimizer.second_moment = in.vec(P);
    s.state.gp.assign(static_cast<std::size_t>(K), GaussianVarParams::isotropic(m, 1.0));
    s.state.phi.assign(static_cast<std::size_t>(K),
                       DirichletVarParams{Eigen::VectorXd::Zero(W)});
    s.state.set_flat(params);
    if (!params.allFinite()) in.corrupt("non-finite parameters");
    result = std::move(s);
  } else if (kind == kKindVgp) {
    const auto W = in.get<std::int64_t>();
    const auto m = in.get<std::int64_t>();
    if (W < 2 || m < 1 || W > (1 << 28) || m > (1 << 20)) in.corrupt("implausible dimensions");
    VgpCheckpoint v;
    v.config_hash = hash;
    const Eigen::Index P = GaussianVarParams::param_count(m);
    for (std::int64_t c = 0; c < W; ++c) {
      const double noise = in.get<double>();
      if (!(noise > 0.0) || !std::isfinite(noise)) in.corrupt("invalid noise variance");
      const Eigen::VectorXd block = in.vec(P);
      if (!block.allFinite()) in.corrupt("non-finite parameters");
      v.state.noise_var.push_back(noise);
      v.state.categories.push_back(GaussianVarParams::unpack(block.data(), m));
    }
    result = std::move(v);
  } else {
    in.corrupt("unknown model kind " + std::to_string(kind));
  }
  if (in.raw(sizeof(kEndMarker)) != std::string(kEndMarker, sizeof(kEndMarker)))
    in.corrupt("missing end marker");
  if (!in.at_end()) in.corrupt("trailing bytes");
  return result;
}

void check_checkpoint_dimensions(const Checkpoint& ckpt, int K, Eigen::Index m, int W) {
  auto mismatch = [](const std::string& name, long long have, long long want) {
    throw ValidationError("checkpoint dimension mismatch: checkpoint has " + name + "=" +
                          std::to_string(have) + " but config has " + name + "=" +
                          std::to_string(want));
  };
  if (const auto* s = std::get_if<SgdrfCheckpoint>(&ckpt)) {
    if (s->state.K() != K) mismatch("K", s->state.K(), K);
    if (s->state.m() != m) mismatch("m", s->state.m(), m);
    if (s->state.W() != W) mismatch("W", s->state.W(), W);
  } else {
    const auto& v = std::get<VgpCheckpoint>(ckpt);
    if (v.state.m() != m) mismatch("m", v.state.m(), m);
    if (v.state.W() != W) mismatch("W", v.state.W(), W);
  }
}

}  // namespace sgdrf
