#include "uesr/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace uesr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'U', 'E', 'S', 'R', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void write_str(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("checkpoint truncated");
  }
  return v;
}

std::string read_str(std::istream& is) {
  const auto n = read_pod<std::uint32_t>(is);
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) throw std::runtime_error("checkpoint truncated");
  return s;
}

}  // namespace

void Checkpoint::put(std::string name, Tensor t) {
  for (auto& [n, existing] : tensors) {
    if (n == name) {
      existing = std::move(t);
      return;
    }
  }
  tensors.emplace_back(std::move(name), std::move(t));
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range("checkpoint has no tensor " + name);
}

bool Checkpoint::has(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(),
                     [&](const auto& e) { return e.first == name; });
}

void Checkpoint::put_parameters(const std::string& prefix,
                                const ParameterSet& params) {
  for (const Parameter& p : params) {
    put(prefix + "/" + p.name, p.value);
    put(prefix + "/" + p.name + "#m", p.m);
    put(prefix + "/" + p.name + "#v", p.v);
  }
  Tensor steps({1});
  steps.values[0] = static_cast<double>(params.adam_steps);
  put(prefix + "/#adam_steps", std::move(steps));
}

void Checkpoint::get_parameters(const std::string& prefix,
                                ParameterSet& params) const {
  auto fetch = [&](const std::string& name, Tensor& dst) {
    if (!has(name)) throw std::runtime_error("checkpoint is missing " + name);
    const Tensor& src = get(name);
    if (src.shape != dst.shape) throw std::runtime_error("shape mismatch for " + name);
    dst = src;
  };
  for (Parameter& p : params) {
    fetch(prefix + "/" + p.name, p.value);
    fetch(prefix + "/" + p.name + "#m", p.m);
    fetch(prefix + "/" + p.name + "#v", p.v);
  }
  Tensor steps({1});
  fetch(prefix + "/#adam_steps", steps);
  params.adam_steps = static_cast<std::int64_t>(steps.values[0]);
  params.zero_grad();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    write_str(os, k);
    write_str(os, v);
  }
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    write_str(os, name);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) write_pod<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.values.data()),
             static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) ||
      !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw std::runtime_error(path.string() + " is not a checkpoint file");
  }
  Checkpoint ckpt;
  const auto n_meta = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = read_str(is);
    ckpt.metadata[k] = read_str(is);
  }
  const auto n_tensors = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = read_str(is);
    const auto ndim = read_pod<std::uint32_t>(is);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
    Tensor t(shape);
    if (!t.values.empty() &&
        !is.read(reinterpret_cast<char*>(t.values.data()),
                 static_cast<std::streamsize>(t.values.size() * sizeof(double)))) {
      throw std::runtime_error("checkpoint truncated");
    }
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace uesr
