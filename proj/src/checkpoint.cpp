#include "gssl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

#include "gssl/binio.hpp"
#include "gssl/error.hpp"

namespace gssl::ad {

namespace {
constexpr char kMagic[4] = {'N', 'T', 'D', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kMagic, 4);
  binio::put_le<std::uint32_t>(out, kVersion);
  for (const auto& [name, t] : tensors) {
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) binio::put_le<std::uint64_t>(out, d);
    for (float v : t.data()) binio::put_le<float>(out, v);
  }
  if (!out) throw InputError("write failed for " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  const std::string where = path.string() + " (checkpoint)";
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw InputError(path.string() + ": not an NTDP checkpoint");
  }
  auto version = binio::get_le<std::uint32_t>(in, where);
  if (version != kVersion) throw InputError(where + ": unsupported version " + std::to_string(version));
  std::vector<NamedTensor> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    auto len = binio::get_le<std::uint32_t>(in, where);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw InputError(where + ": truncated");
    auto rank = binio::get_le<std::uint32_t>(in, where);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(binio::get_le<std::uint64_t>(in, where));
    std::vector<float> data(numel(shape));
    for (auto& v : data) v = binio::get_le<float>(in, where);
    out.push_back({std::move(name), Tensor<float>::from(std::move(shape), std::move(data), true)});
  }
  return out;
}

void restore_into(const std::vector<NamedTensor>& saved, std::vector<NamedTensor>& params) {
  std::unordered_map<std::string, const Tensor<float>*> by_name;
  for (const auto& s : saved) by_name[s.name] = &s.tensor;
  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw InputError("checkpoint has no tensor '" + p.name + "'");
    if (it->second->shape() != p.tensor.shape()) {
      throw InputError("checkpoint tensor '" + p.name + "' has shape " + shape_str(it->second->shape()) +
                       ", expected " + shape_str(p.tensor.shape()));
    }
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), p.tensor.mutable_data().begin());
  }
}

}  // namespace gssl::ad
