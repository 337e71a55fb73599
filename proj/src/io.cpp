#include "pam/io.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace pam {

namespace {

std::string chars_of(auto v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format: to_chars failed");
  return std::string(buf, p);
}

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
  throw std::runtime_error(std::string(what) + ": " + path.string());
}

nlohmann::json sidecar_of(const std::filesystem::path& stem, const char* kind) {
  nlohmann::json j = read_json(std::filesystem::path(stem) += ".json");
  if (j.value("kind", std::string()) != kind)
    throw std::runtime_error("sidecar kind mismatch, expected " + std::string(kind) + ": " +
                             stem.string());
  return j;
}

Eigen::ArrayXd array_of(const std::filesystem::path& stem, std::size_t expect) {
  std::vector<double> raw = read_f64(std::filesystem::path(stem) += ".f64");
  if (raw.size() != expect)
    throw std::runtime_error("array length disagrees with sidecar geometry: " + stem.string());
  return Eigen::Map<const Eigen::ArrayXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
}

void write_array(const std::filesystem::path& stem, const double* data, std::size_t count) {
  write_f64(std::filesystem::path(stem) += ".f64", data, count);
}

}  // namespace

std::string format_f64(double v) { return chars_of(v); }
std::string format_i64(long long v) { return chars_of(v); }
std::string format_u64(std::uint64_t v) { return chars_of(v); }

void write_f64(const std::filesystem::path& path, const double* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  std::vector<char> bytes(count * 8);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<char>((u >> (8 * b)) & 0xff);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "short write");
}

std::vector<double> read_f64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(path, "read failure");
  if (bytes.size() % 8 != 0) fail(path, "byte count is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b)
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * i + b])) << (8 * b);
    out[i] = std::bit_cast<double>(u);
  }
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(path, "short write");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void to_json(nlohmann::json& j, const BoxSpec& box) {
  j = {{"dim", box.dim},
       {"radius", box.radius},
       {"box", box.kind == BoxKind::lattice ? "lattice" : "continuum"}};
}

void from_json(const nlohmann::json& j, BoxSpec& box) {
  std::string kind = j.at("box").get<std::string>();
  if (kind == "lattice")
    box = BoxSpec::lattice_box(j.at("dim").get<int>(),
                               static_cast<long>(j.at("radius").get<double>()));
  else if (kind == "continuum")
    box = BoxSpec::continuum_box(j.at("dim").get<int>(), j.at("radius").get<double>());
  else
    throw std::runtime_error("unknown box kind: " + kind);
}

void to_json(nlohmann::json& j, const PotentialDistribution& dist) {
  switch (dist.family) {
    case Family::triple_exp:
      j = {{"family", "triple_exp"}, {"rho0", dist.rho0}};
      break;
    case Family::constant:
      j = {{"family", "constant"}, {"value", dist.value}};
      break;
    case Family::two_point:
      j = {{"family", "two_point"}, {"lo", dist.lo}, {"hi", dist.hi}, {"p_lo", dist.p_lo}};
      break;
  }
}

void from_json(const nlohmann::json& j, PotentialDistribution& dist) {
  std::string family = j.at("family").get<std::string>();
  if (family == "triple_exp")
    dist = PotentialDistribution::triple_exp(j.at("rho0").get<double>());
  else if (family == "constant")
    dist = PotentialDistribution::constant(j.at("value").get<double>());
  else if (family == "two_point")
    dist = PotentialDistribution::two_point(j.at("lo").get<double>(), j.at("hi").get<double>(),
                                            j.at("p_lo").get<double>());
  else
    throw std::runtime_error("unknown distribution family: " + family);
}

void export_field(const PotentialField& field, const std::filesystem::path& stem) {
  write_array(stem, field.values.data(), static_cast<std::size_t>(field.values.size()));
  write_json(std::filesystem::path(stem) += ".json",
             {{"kind", "field"},
              {"box", field.box},
              {"seed", field.seed},
              {"distribution", field.dist}});
}

PotentialField import_field(const std::filesystem::path& stem) {
  nlohmann::json j = sidecar_of(stem, "field");
  PotentialField field;
  field.box = j.at("box").get<BoxSpec>();
  field.seed = j.at("seed").get<std::uint64_t>();
  field.dist = j.at("distribution").get<PotentialDistribution>();
  field.values = array_of(stem, static_cast<std::size_t>(field.box.site_count()));
  return field;
}

void export_grid(const GridFunction& g, const std::filesystem::path& stem) {
  write_array(stem, g.values.data(), static_cast<std::size_t>(g.values.size()));
  write_json(std::filesystem::path(stem) += ".json",
             {{"kind", "grid"},
              {"d", g.d},
              {"L", g.L},
              {"h", g.h},
              {"zero_outside", g.zero_outside}});
}

GridFunction import_grid(const std::filesystem::path& stem) {
  nlohmann::json j = sidecar_of(stem, "grid");
  GridFunction g = GridFunction::make(j.at("d").get<int>(), j.at("L").get<double>(),
                                      j.at("h").get<double>(), j.at("zero_outside").get<bool>());
  g.values = array_of(stem, static_cast<std::size_t>(g.node_count()));
  return g;
}

void export_solution(const SolutionState& state, const std::filesystem::path& stem) {
  write_array(stem, state.values.data(), static_cast<std::size_t>(state.values.size()));
  write_json(std::filesystem::path(stem) += ".json",
             {{"kind", "solution"}, {"time", state.time}, {"box", state.box}});
}

SolutionState import_solution(const std::filesystem::path& stem) {
  nlohmann::json j = sidecar_of(stem, "solution");
  SolutionState state;
  state.time = j.at("time").get<double>();
  state.box = j.at("box").get<BoxSpec>();
  state.values = array_of(stem, static_cast<std::size_t>(state.box.site_count()));
  return state;
}

void export_eigenvector(const EigenResult& r, const BoxSpec& box,
                        const std::filesystem::path& stem) {
  write_array(stem, r.vector.data(), static_cast<std::size_t>(r.vector.size()));
  write_json(std::filesystem::path(stem) += ".json",
             {{"kind", "eigenvector"},
              {"box", box},
              {"value", r.value},
              {"iterations", r.iterations},
              {"residual", r.residual}});
}

CsvTable::CsvTable(std::vector<std::string> columns) : ncols_(columns.size()) {
  if (columns.empty()) throw std::invalid_argument("CsvTable: need at least one column");
  append(columns);
}

void CsvTable::add_row(const std::vector<std::string>& fields) {
  if (fields.size() != ncols_) throw std::invalid_argument("CsvTable: row width mismatch");
  append(fields);
}

void CsvTable::append(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      text_ += f;
    } else {
      text_ += '"';
      for (char c : f) {
        if (c == '"') text_ += '"';
        text_ += c;
      }
      text_ += '"';
    }
  }
  text_ += '\n';
}

void CsvTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(text_.data(), static_cast<std::streamsize>(text_.size()));
  if (!out) fail(path, "short write");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

nlohmann::json make_manifest(const nlohmann::json& config) {
  char buf[17];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, fnv1a64(config.dump()), 16);
  std::string hex(16 - (p - buf), '0');
  hex.append(buf, p);
  return {{"version", std::string(kVersion)}, {"config_hash", hex}, {"config", config}};
}

}  // namespace pam
