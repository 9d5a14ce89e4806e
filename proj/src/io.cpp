#include "evpan/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace evpan {

namespace {

std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  if (f.bad()) throw IoError("read failed for " + path);
  return os.str();
}

uint32_t get_u32(const std::string& b, size_t off) {
  return static_cast<uint32_t>(static_cast<unsigned char>(b[off])) |
         (static_cast<uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8) |
         (static_cast<uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16) |
         (static_cast<uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24);
}

uint16_t get_u16(const std::string& b, size_t off) {
  return static_cast<uint16_t>(static_cast<unsigned char>(b[off]) |
                               (static_cast<unsigned char>(b[off + 1]) << 8));
}

float get_f32(const std::string& b, size_t off) {
  const uint32_t bits = get_u32(b, off);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_u32(std::string& b, uint32_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>((v >> 8) & 0xFF));
  b.push_back(static_cast<char>((v >> 16) & 0xFF));
  b.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& b, uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_f32(std::string& b, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(b, bits);
}

}  // namespace

void atomic_write_bytes(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

PointCloud read_scan(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(path + ": scan payload truncated at byte offset " +
                      std::to_string(bytes.size() - bytes.size() % 16));
  }
  const size_t n = bytes.size() / 16;
  PointCloud c;
  c.x.resize(n);
  c.y.resize(n);
  c.z.resize(n);
  c.remission.resize(n);
  for (size_t i = 0; i < n; ++i) {
    c.x[i] = get_f32(bytes, i * 16);
    c.y[i] = get_f32(bytes, i * 16 + 4);
    c.z[i] = get_f32(bytes, i * 16 + 8);
    c.remission[i] = get_f32(bytes, i * 16 + 12);
  }
  return c;
}

void write_scan(const std::string& path, const PointCloud& cloud) {
  std::string bytes;
  bytes.reserve(cloud.size() * 16);
  for (size_t i = 0; i < cloud.size(); ++i) {
    put_f32(bytes, cloud.x[i]);
    put_f32(bytes, cloud.y[i]);
    put_f32(bytes, cloud.z[i]);
    put_f32(bytes, cloud.remission[i]);
  }
  atomic_write_bytes(path, bytes);
}

PanopticLabelSet read_labels(const std::string& path, const ClassTaxonomy& tax,
                             DecodeStats* stats) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw FormatError(path + ": label payload truncated at byte offset " +
                      std::to_string(bytes.size() - bytes.size() % 4));
  }
  const size_t n = bytes.size() / 4;
  PanopticLabelSet out;
  out.semantic.resize(n);
  out.instance.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const auto [sem, inst] = decode_label(get_u32(bytes, i * 4), tax, stats);
    out.semantic[i] = sem;
    out.instance[i] = inst;
  }
  return out;
}

void write_labels(const std::string& path, const PanopticLabelSet& labels,
                  const ClassTaxonomy& tax) {
  std::string bytes;
  bytes.reserve(labels.size() * 4);
  for (size_t i = 0; i < labels.size(); ++i) {
    put_u32(bytes, encode_label(labels.semantic[i], labels.instance[i], tax));
  }
  atomic_write_bytes(path, bytes);
}

DirichletField AlphaDump::to_field() const {
  DirichletField f(n, k);
  for (size_t i = 0; i < alpha.size(); ++i) f.alpha[i] = static_cast<double>(alpha[i]);
  return f;
}

AlphaDump AlphaDump::from_field(const DirichletField& f) {
  AlphaDump d;
  d.n = static_cast<uint32_t>(f.n);
  d.k = static_cast<uint16_t>(f.k);
  d.alpha.resize(f.alpha.size());
  for (size_t i = 0; i < f.alpha.size(); ++i) d.alpha[i] = static_cast<float>(f.alpha[i]);
  return d;
}

namespace {
constexpr char kAlphaMagic[4] = {'E', 'V', 'L', 'A'};
constexpr size_t kAlphaHeader = 4 + 2 + 4 + 2 + 2;
}  // namespace

AlphaDump read_alpha(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < kAlphaHeader || std::memcmp(bytes.data(), kAlphaMagic, 4) != 0) {
    throw FormatError(path + ": not an alpha dump (bad magic)");
  }
  AlphaDump d;
  d.version = get_u16(bytes, 4);
  if (d.version != 1) throw FormatError(path + ": unsupported alpha dump version");
  d.n = get_u32(bytes, 6);
  d.k = get_u16(bytes, 10);
  const uint16_t flags = get_u16(bytes, 12);
  d.has_instances = (flags & 1u) != 0;
  d.has_refined = (flags & 2u) != 0;

  const size_t alpha_count = static_cast<size_t>(d.n) * d.k;
  const size_t expect =
      kAlphaHeader + alpha_count * 4 + (d.has_instances ? static_cast<size_t>(d.n) * 4 : 0);
  if (bytes.size() != expect) {
    throw FormatError(path + ": payload size " + std::to_string(bytes.size()) +
                      " does not match declared count (expected " + std::to_string(expect) + ")");
  }
  d.alpha.resize(alpha_count);
  size_t off = kAlphaHeader;
  for (size_t i = 0; i < alpha_count; ++i, off += 4) {
    d.alpha[i] = get_f32(bytes, off);
    if (!(d.alpha[i] >= 1.0f)) {
      throw FormatError(path + ": alpha entry " + std::to_string(i) + " below 1");
    }
  }
  if (d.has_instances) {
    d.instance.resize(d.n);
    for (size_t i = 0; i < d.n; ++i, off += 4) d.instance[i] = get_u32(bytes, off);
  }
  return d;
}

void write_alpha(const std::string& path, const AlphaDump& dump) {
  if (dump.alpha.size() != static_cast<size_t>(dump.n) * dump.k) {
    throw FormatError(path + ": alpha payload does not match declared count");
  }
  if (dump.has_instances && dump.instance.size() != dump.n) {
    throw FormatError(path + ": instance payload does not match declared count");
  }
  std::string bytes;
  bytes.reserve(kAlphaHeader + dump.alpha.size() * 4 + dump.instance.size() * 4);
  bytes.append(kAlphaMagic, 4);
  put_u16(bytes, dump.version);
  put_u32(bytes, dump.n);
  put_u16(bytes, dump.k);
  const uint16_t flags =
      static_cast<uint16_t>((dump.has_instances ? 1u : 0u) | (dump.has_refined ? 2u : 0u));
  put_u16(bytes, flags);
  for (const float a : dump.alpha) put_f32(bytes, a);
  if (dump.has_instances) {
    for (const uint32_t id : dump.instance) put_u32(bytes, id);
  }
  atomic_write_bytes(path, bytes);
}

namespace {

struct Setter {
  std::function<void(Config&, const std::string&, int)> apply;
};

int64_t parse_int(const std::string& v, int line) {
  try {
    size_t pos = 0;
    const int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": not an integer: '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& v, int line) {
  try {
    size_t pos = 0;
    const uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": not an unsigned integer: '" + v + "'");
  }
}

double parse_double(const std::string& v, int line) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": not a number: '" + v + "'");
  }
}

const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto add_int = [&](const std::string& key, int Config::* field) {
      t[key] = {[field](Config& c, const std::string& v, int line) {
        c.*field = static_cast<int>(parse_int(v, line));
      }};
    };
    auto add_dbl = [&](const std::string& key, double Config::* field) {
      t[key] = {[field](Config& c, const std::string& v, int line) {
        c.*field = parse_double(v, line);
      }};
    };
    auto add_str = [&](const std::string& key, std::string Config::* field) {
      t[key] = {[field](Config& c, const std::string& v, int line) {
        (void)line;
        c.*field = v;
      }};
    };
    add_str("taxonomy.file", &Config::taxonomy_file);
    t["grid.h"] = {[](Config& c, const std::string& v, int l) { c.grid.h = static_cast<int>(parse_int(v, l)); }};
    t["grid.w"] = {[](Config& c, const std::string& v, int l) { c.grid.w = static_cast<int>(parse_int(v, l)); }};
    t["grid.z"] = {[](Config& c, const std::string& v, int l) { c.grid.z = static_cast<int>(parse_int(v, l)); }};
    t["grid.r_min"] = {[](Config& c, const std::string& v, int l) { c.grid.r_min = parse_double(v, l); }};
    t["grid.r_max"] = {[](Config& c, const std::string& v, int l) { c.grid.r_max = parse_double(v, l); }};
    t["grid.z_min"] = {[](Config& c, const std::string& v, int l) { c.grid.z_min = parse_double(v, l); }};
    t["grid.z_max"] = {[](Config& c, const std::string& v, int l) { c.grid.z_max = parse_double(v, l); }};
    add_dbl("gauss.sigma", &Config::gauss_sigma);
    add_int("nms.kernel", &Config::nms_kernel);
    add_dbl("nms.threshold", &Config::nms_threshold);
    add_int("nms.top_k", &Config::nms_top_k);
    add_int("pknn.k", &Config::pknn_k);
    add_dbl("pknn.threshold", &Config::pknn_threshold);
    t["uqr.n"] = {[](Config& c, const std::string& v, int l) { c.uqr_n = parse_u64(v, l); }};
    add_int("uqr.m", &Config::uqr_m);
    add_int("uqr.c_mid", &Config::uqr_c_mid);
    add_dbl("uqr.radius", &Config::uqr_radius);
    add_dbl("uqr.sigma", &Config::uqr_sigma);
    add_str("uqr.weights", &Config::uqr_weights);
    add_dbl("loss.lambda_h", &Config::lambda_h);
    add_dbl("loss.lambda_o", &Config::lambda_o);
    add_dbl("loss.kl_cap", &Config::kl_cap);
    add_int("loss.kl_ramp_epochs", &Config::kl_ramp_epochs);
    add_int("calib.bins", &Config::calib_bins);
    add_str("refine.order", &Config::refine_order);
    auto add_synth_int = [&](const std::string& key, int SynthParams::* field) {
      t[key] = {[field](Config& c, const std::string& v, int line) {
        c.synth.*field = static_cast<int>(parse_int(v, line));
      }};
    };
    add_synth_int("synth.scenes", &SynthParams::scenes);
    add_synth_int("synth.cars", &SynthParams::cars);
    add_synth_int("synth.persons", &SynthParams::persons);
    add_synth_int("synth.poles", &SynthParams::poles);
    add_synth_int("synth.trunks", &SynthParams::trunks);
    add_synth_int("synth.signs", &SynthParams::signs);
    add_synth_int("synth.sidewalk_sectors", &SynthParams::sidewalk_sectors);
    add_synth_int("synth.road_points", &SynthParams::road_points);
    add_synth_int("synth.sidewalk_points", &SynthParams::sidewalk_points);
    add_synth_int("synth.points_per_car", &SynthParams::points_per_car);
    add_synth_int("synth.points_per_person", &SynthParams::points_per_person);
    add_synth_int("synth.points_per_pole", &SynthParams::points_per_pole);
    add_synth_int("synth.points_per_trunk", &SynthParams::points_per_trunk);
    add_synth_int("synth.points_per_sign", &SynthParams::points_per_sign);
    add_synth_int("synth.oor_stragglers", &SynthParams::oor_stragglers);
    t["synth.seed"] = {[](Config& c, const std::string& v, int l) { c.synth.seed = parse_u64(v, l); }};
    t["corrupt.mode"] = {[](Config& c, const std::string& v, int l) {
      if (v != "calibrated" && v != "overconfident" && v != "underconfident") {
        throw ConfigError("line " + std::to_string(l) + ": unknown corrupt.mode '" + v + "'");
      }
      c.corrupt.mode = v;
    }};
    t["corrupt.gamma"] = {[](Config& c, const std::string& v, int l) { c.corrupt.gamma = parse_double(v, l); }};
    t["corrupt.q_lo"] = {[](Config& c, const std::string& v, int l) { c.corrupt.q_lo = parse_double(v, l); }};
    t["corrupt.q_hi"] = {[](Config& c, const std::string& v, int l) { c.corrupt.q_hi = parse_double(v, l); }};
    t["corrupt.evidence_scale"] = {[](Config& c, const std::string& v, int l) { c.corrupt.evidence_scale = parse_double(v, l); }};
    t["corrupt.flip_scale"] = {[](Config& c, const std::string& v, int l) { c.corrupt.flip_scale = parse_double(v, l); }};
    t["toytrain.epochs"] = {[](Config& c, const std::string& v, int l) { c.toytrain.epochs = static_cast<int>(parse_int(v, l)); }};
    t["toytrain.lr"] = {[](Config& c, const std::string& v, int l) { c.toytrain.lr = parse_double(v, l); }};
    t["toytrain.train_points"] = {[](Config& c, const std::string& v, int l) { c.toytrain.train_points = static_cast<int>(parse_int(v, l)); }};
    t["toytrain.test_points"] = {[](Config& c, const std::string& v, int l) { c.toytrain.test_points = static_cast<int>(parse_int(v, l)); }};
    t["toytrain.separation"] = {[](Config& c, const std::string& v, int l) { c.toytrain.separation = parse_double(v, l); }};
    t["toytrain.seed"] = {[](Config& c, const std::string& v, int l) { c.toytrain.seed = parse_u64(v, l); }};
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void validate_config(const Config& c) {
  if (c.grid.h < 1 || c.grid.w < 1 || c.grid.z < 1) throw ConfigError("grid dimensions must be >= 1");
  if (!(c.grid.r_min < c.grid.r_max)) throw ConfigError("grid.r_min must be below grid.r_max");
  if (!(c.grid.z_min < c.grid.z_max)) throw ConfigError("grid.z_min must be below grid.z_max");
  if (c.nms_kernel < 1 || c.nms_kernel % 2 == 0) throw ConfigError("nms.kernel must be odd and positive");
  if (c.calib_bins < 1) throw ConfigError("calib.bins must be >= 1");
  if (c.pknn_k < 1) throw ConfigError("pknn.k must be >= 1");
  if (c.refine_order != "uqr_then_pknn" && c.refine_order != "pknn_then_uqr") {
    throw ConfigError("refine.order must be uqr_then_pknn or pknn_then_uqr");
  }
}

}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  const auto& setters = config_setters();
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    it->second.apply(cfg, value, lineno);
  }
  validate_config(cfg);
  return cfg;
}

Config load_config(const std::string& path) {
  return parse_config(read_file_bytes(path));
}

std::string serialize_config(const Config& c) {
  std::ostringstream os;
  char buf[64];
  auto dbl = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "taxonomy.file = " << c.taxonomy_file << "\n";
  os << "grid.h = " << c.grid.h << "\n";
  os << "grid.w = " << c.grid.w << "\n";
  os << "grid.z = " << c.grid.z << "\n";
  os << "grid.r_min = " << dbl(c.grid.r_min) << "\n";
  os << "grid.r_max = " << dbl(c.grid.r_max) << "\n";
  os << "grid.z_min = " << dbl(c.grid.z_min) << "\n";
  os << "grid.z_max = " << dbl(c.grid.z_max) << "\n";
  os << "gauss.sigma = " << dbl(c.gauss_sigma) << "\n";
  os << "nms.kernel = " << c.nms_kernel << "\n";
  os << "nms.threshold = " << dbl(c.nms_threshold) << "\n";
  os << "nms.top_k = " << c.nms_top_k << "\n";
  os << "pknn.k = " << c.pknn_k << "\n";
  os << "pknn.threshold = " << dbl(c.pknn_threshold) << "\n";
  os << "uqr.n = " << c.uqr_n << "\n";
  os << "uqr.m = " << c.uqr_m << "\n";
  os << "uqr.c_mid = " << c.uqr_c_mid << "\n";
  os << "uqr.radius = " << dbl(c.uqr_radius) << "\n";
  os << "uqr.sigma = " << dbl(c.uqr_sigma) << "\n";
  os << "uqr.weights = " << c.uqr_weights << "\n";
  os << "loss.lambda_h = " << dbl(c.lambda_h) << "\n";
  os << "loss.lambda_o = " << dbl(c.lambda_o) << "\n";
  os << "loss.kl_cap = " << dbl(c.kl_cap) << "\n";
  os << "loss.kl_ramp_epochs = " << c.kl_ramp_epochs << "\n";
  os << "calib.bins = " << c.calib_bins << "\n";
  os << "refine.order = " << c.refine_order << "\n";
  os << "synth.scenes = " << c.synth.scenes << "\n";
  os << "synth.cars = " << c.synth.cars << "\n";
  os << "synth.persons = " << c.synth.persons << "\n";
  os << "synth.poles = " << c.synth.poles << "\n";
  os << "synth.trunks = " << c.synth.trunks << "\n";
  os << "synth.signs = " << c.synth.signs << "\n";
  os << "synth.sidewalk_sectors = " << c.synth.sidewalk_sectors << "\n";
  os << "synth.road_points = " << c.synth.road_points << "\n";
  os << "synth.sidewalk_points = " << c.synth.sidewalk_points << "\n";
  os << "synth.points_per_car = " << c.synth.points_per_car << "\n";
  os << "synth.points_per_person = " << c.synth.points_per_person << "\n";
  os << "synth.points_per_pole = " << c.synth.points_per_pole << "\n";
  os << "synth.points_per_trunk = " << c.synth.points_per_trunk << "\n";
  os << "synth.points_per_sign = " << c.synth.points_per_sign << "\n";
  os << "synth.oor_stragglers = " << c.synth.oor_stragglers << "\n";
  os << "synth.seed = " << c.synth.seed << "\n";
  os << "corrupt.mode = " << c.corrupt.mode << "\n";
  os << "corrupt.gamma = " << dbl(c.corrupt.gamma) << "\n";
  os << "corrupt.q_lo = " << dbl(c.corrupt.q_lo) << "\n";
  os << "corrupt.q_hi = " << dbl(c.corrupt.q_hi) << "\n";
  os << "corrupt.evidence_scale = " << dbl(c.corrupt.evidence_scale) << "\n";
  os << "corrupt.flip_scale = " << dbl(c.corrupt.flip_scale) << "\n";
  os << "toytrain.epochs = " << c.toytrain.epochs << "\n";
  os << "toytrain.lr = " << dbl(c.toytrain.lr) << "\n";
  os << "toytrain.train_points = " << c.toytrain.train_points << "\n";
  os << "toytrain.test_points = " << c.toytrain.test_points << "\n";
  os << "toytrain.separation = " << dbl(c.toytrain.separation) << "\n";
  os << "toytrain.seed = " << c.toytrain.seed << "\n";
  return os.str();
}

void save_config(const std::string& path, const Config& cfg) {
  atomic_write_bytes(path, serialize_config(cfg));
}

ClassTaxonomy load_taxonomy(const std::string& path) {
  const std::string text = read_file_bytes(path);
  ClassTaxonomy tax;
  tax.k = 0;
  std::map<int, std::tuple<std::string, bool, uint32_t>> classes;
  std::vector<std::pair<uint32_t, std::string>> maps;
  int declared_k = -1;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("taxonomy line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::istringstream vs(value);
    if (key == "k") {
      declared_k = static_cast<int>(parse_int(value, lineno));
    } else if (key == "ignore") {
      tax.ignore_id = static_cast<int>(parse_int(value, lineno));
    } else if (key == "ignore_raw") {
      tax.ignore_raw = static_cast<uint32_t>(parse_u64(value, lineno));
    } else if (key == "class") {
      int train;
      std::string name, kind;
      uint32_t raw;
      if (!(vs >> train >> name >> kind >> raw) || (kind != "thing" && kind != "stuff")) {
        throw ConfigError("taxonomy line " + std::to_string(lineno) +
                          ": expected 'class = <train> <name> <thing|stuff> <raw>'");
      }
      if (classes.count(train)) {
        throw ConfigError("taxonomy line " + std::to_string(lineno) + ": duplicate class " +
                          std::to_string(train));
      }
      classes[train] = {name, kind == "thing", raw};
    } else if (key == "map") {
      uint32_t raw;
      std::string target;
      if (!(vs >> raw >> target)) {
        throw ConfigError("taxonomy line " + std::to_string(lineno) +
                          ": expected 'map = <raw> <train|ignore>'");
      }
      maps.emplace_back(raw, target);
    } else {
      throw ConfigError("taxonomy line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (declared_k < 1) throw ConfigError("taxonomy: missing or invalid 'k'");
  if (static_cast<int>(classes.size()) != declared_k) {
    throw ConfigError("taxonomy: declared k = " + std::to_string(declared_k) + " but " +
                      std::to_string(classes.size()) + " classes were defined");
  }
  tax.k = declared_k;
  if (tax.ignore_id >= 0 && tax.ignore_id < tax.k) {
    throw ConfigError("taxonomy: ignore id collides with an evaluated class");
  }
  tax.names.resize(static_cast<size_t>(tax.k));
  tax.is_thing.resize(static_cast<size_t>(tax.k));
  tax.train_to_raw.resize(static_cast<size_t>(tax.k));
  for (const auto& [train, def] : classes) {
    if (train < 0 || train >= tax.k) {
      throw ConfigError("taxonomy: class id " + std::to_string(train) + " outside [0, k)");
    }
    const auto& [name, thing, raw] = def;
    tax.names[static_cast<size_t>(train)] = name;
    tax.is_thing[static_cast<size_t>(train)] = thing ? 1 : 0;
    tax.train_to_raw[static_cast<size_t>(train)] = raw;
    tax.raw_to_train[raw] = train;
  }
  for (const auto& [raw, target] : maps) {
    if (target == "ignore") {
      tax.raw_to_train[raw] = tax.ignore_id;
    } else {
      const int train = static_cast<int>(parse_int(target, 0));
      if (train < 0 || train >= tax.k) {
        throw ConfigError("taxonomy: map target " + target + " outside [0, k)");
      }
      tax.raw_to_train[raw] = train;
    }
  }
  tax.raw_to_train[tax.ignore_raw] = tax.ignore_id;
  return tax;
}

}  // namespace evpan
