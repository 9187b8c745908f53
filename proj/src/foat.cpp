#include "foaa/foat.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "foaa/errors.hpp"

namespace foaa::foat {

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("FOAT: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::string body = text;
  if (body.size() < 2 || body.front() != '[' || body.back() != ']')
    throw IoError("manifest: malformed shape '" + text + "'");
  body = body.substr(1, body.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, 'x')) shape.push_back(std::stoull(item));
  return shape;
}

}  // namespace

void write(std::ostream& os, const Tensor& t) {
  if (t.rank() > 255) throw DimensionError("FOAT supports at most 255 dimensions");
  os.write(reinterpret_cast<const char*>(kMagic), 4);
  const unsigned char hdr[3] = {kVersion, kDtypeF64, static_cast<unsigned char>(t.rank())};
  os.write(reinterpret_cast<const char*>(hdr), 3);
  for (auto d : t.shape()) put_u64(os, d);
  for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("FOAT: write failed");
}

Tensor read(std::istream& is) {
  unsigned char hdr[7];
  if (!is.read(reinterpret_cast<char*>(hdr), 7)) throw IoError("FOAT: truncated header");
  if (std::memcmp(hdr, kMagic, 4) != 0) throw IoError("FOAT: bad magic");
  if (hdr[4] != kVersion) throw IoError("FOAT: unsupported version " + std::to_string(hdr[4]));
  if (hdr[5] != kDtypeF64) throw IoError("FOAT: unsupported dtype " + std::to_string(hdr[5]));
  const unsigned ndim = hdr[6];
  if (ndim == 0) throw IoError("FOAT: zero-dimensional tensor");
  Shape shape(ndim);
  for (auto& d : shape) {
    d = get_u64(is);
    if (d == 0) throw IoError("FOAT: zero-sized dimension");
  }
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("FOAT: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_file(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write(os, t);
}

Tensor read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read(is);
}

void save_parameters(const std::filesystem::path& dir, std::span<const Parameter* const> params) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in " + dir.string());
  for (const Parameter* p : params) {
    const std::string file = p->name + ".foat";
    write_file(dir / file, p->value);
    manifest << p->name << " = " << file << ' ' << shape_to_string(p->value.shape()) << '\n';
  }
  if (!manifest) throw IoError("manifest write failed in " + dir.string());
}

void load_parameters(const std::filesystem::path& dir, std::span<Parameter* const> params) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("missing manifest.txt in " + dir.string());
  std::map<std::string, std::pair<std::string, Shape>> entries;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, eq, file, shape;
    if (!(ls >> name >> eq >> file >> shape) || eq != "=") throw IoError("manifest: malformed line '" + line + "'");
    entries[name] = {file, parse_shape(shape)};
  }
  if (entries.size() != params.size())
    throw ContractError("parameter manifest lists " + std::to_string(entries.size()) + " entries, model has " +
                        std::to_string(params.size()));
  for (Parameter* p : params) {
    auto it = entries.find(p->name);
    if (it == entries.end()) throw ContractError("parameter '" + p->name + "' missing from manifest");
    if (it->second.second != p->value.shape())
      throw ContractError("parameter '" + p->name + "' has shape " + shape_to_string(it->second.second) +
                          " on disk, expected " + shape_to_string(p->value.shape()));
    Tensor t = read_file(dir / it->second.first);
    if (t.shape() != p->value.shape()) throw ContractError("parameter '" + p->name + "' file shape disagrees with manifest");
    p->value = std::move(t);
  }
}

}  // namespace foaa::foat
