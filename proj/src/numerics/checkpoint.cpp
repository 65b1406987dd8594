#include "ilnet/numerics/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ilnet/errors.hpp"

namespace ilnet {

namespace fs = std::filesystem;

const DenseArray& Checkpoint::array(const std::string& name) const {
  for (const auto& [n, a] : arrays) {
    if (n == name) return a;
  }
  throw DataError("checkpoint has no array '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const auto& [n, a] : arrays) {
    if (n == name) return true;
  }
  return false;
}

namespace {

std::string encode_shape(const Shape& s) {
  if (s.empty()) return "scalar";
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

Shape decode_shape(const std::string& text, std::size_t line) {
  if (text == "scalar") return {};
  Shape s;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(part, &used);
      if (used != part.size() || v == 0) throw std::invalid_argument(part);
      s.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ParseError("manifest line " + std::to_string(line) + ": bad shape '" + text + "'");
    }
  }
  if (s.empty()) throw ParseError("manifest line " + std::to_string(line) + ": empty shape");
  return s;
}

void put_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu);
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  std::ofstream blob(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!manifest || !blob) throw IoError("cannot write checkpoint into " + dir.string());
  manifest << "ilnet-checkpoint " << Checkpoint::kVersion << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ArgumentError("checkpoint meta key/value contains whitespace: '" + k + "'");
    }
    manifest << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& [name, arr] : ckpt.arrays) {
    if (name.find_first_of(" \t\n") != std::string::npos) throw ArgumentError("array name with whitespace: " + name);
    manifest << "array " << name << ' ' << encode_shape(arr.shape()) << '\n';
    for (double v : arr.values()) put_le(blob, v);
  }
  if (!manifest.good() || !blob.good()) throw IoError("failed writing checkpoint into " + dir.string());
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot open " + (dir / "manifest.txt").string());
  Checkpoint ckpt;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::string, Shape>> layout;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (lineno == 1) {
      int version = -1;
      if (tag != "ilnet-checkpoint" || !(ls >> version)) throw VersionError("not an ilnet checkpoint manifest: " + dir.string());
      if (version != Checkpoint::kVersion) {
        throw VersionError("checkpoint version " + std::to_string(version) + " (expected " +
                           std::to_string(Checkpoint::kVersion) + ")");
      }
      continue;
    }
    if (tag == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      if (key.empty()) throw ParseError("manifest line " + std::to_string(lineno) + ": meta without key");
      ckpt.meta[key] = value;
    } else if (tag == "array") {
      std::string name, shape;
      if (!(ls >> name >> shape)) throw ParseError("manifest line " + std::to_string(lineno) + ": expected 'array <name> <shape>'");
      layout.emplace_back(name, decode_shape(shape, lineno));
    } else {
      throw ParseError("manifest line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }
  if (lineno == 0) throw VersionError("empty checkpoint manifest: " + dir.string());

  std::ifstream blob(dir / "weights.bin", std::ios::binary);
  if (!blob) throw IoError("cannot open " + (dir / "weights.bin").string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());
  std::size_t expected = 0;
  for (const auto& [n, s] : layout) expected += shape_numel(s) * 8;
  if (bytes.size() != expected) {
    throw ParseError("weights.bin holds " + std::to_string(bytes.size()) + " bytes, manifest needs " +
                     std::to_string(expected));
  }
  std::size_t off = 0;
  for (auto& [name, shape] : layout) {
    DenseArray a(shape);
    for (double& v : a.values()) {
      v = get_le(bytes.data() + off);
      off += 8;
    }
    ckpt.arrays.emplace_back(name, std::move(a));
  }
  return ckpt;
}

void append_params(Checkpoint& ckpt, const ParamStore& store, const std::string& prefix) {
  for (const auto& e : store.entries()) ckpt.arrays.emplace_back(prefix + e.name, e.value);
}

void restore_params(const Checkpoint& ckpt, ParamStore& store, const std::string& prefix) {
  for (auto& e : store.entries()) {
    const DenseArray& a = ckpt.array(prefix + e.name);
    if (a.shape() != e.value.shape()) {
      throw VersionError("checkpoint array '" + e.name + "' has shape " + shape_str(a.shape()) + ", model expects " +
                         shape_str(e.value.shape()));
    }
    e.value = a;
  }
}

}  // namespace ilnet
