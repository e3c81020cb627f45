#include "seupred/nn.hpp"

#include <filesystem>

#include <json.hpp>

#include "seupred/io_util.hpp"

namespace seupred {

GraphIndex graph_index(const SpatialGraph& g) {
  GraphIndex gi;
  gi.n = g.n;
  gi.src.assign(g.src.begin(), g.src.end());
  gi.dst.assign(g.dst.begin(), g.dst.end());
  return gi;
}

void save_checkpoint(const std::map<std::string, Tensor>& params, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  nlohmann::ordered_json index;
  for (const auto& [name, t] : params) {
    index[name] = t.shape;
    write_file(dir + "/" + name + ".bin", encode_f32_array(t.data));
  }
  write_file(dir + "/index.json", index.dump(2) + "\n");
}

std::map<std::string, Tensor> load_checkpoint(const std::string& dir) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(dir + "/index.json"));
  } catch (const nlohmann::json::exception& e) {
    throw SyntaxError(std::string("checkpoint index: ") + e.what());
  }
  if (!index.is_object()) throw SyntaxError("checkpoint index must be an object");
  std::map<std::string, Tensor> params;
  for (const auto& [name, shp] : index.items()) {
    if (!shp.is_array()) throw SyntaxError("checkpoint shape of " + name + " must be an array");
    std::vector<int> shape;
    for (const auto& d : shp) {
      if (!d.is_number_integer() || d.get<int64_t>() < 0)
        throw SyntaxError("checkpoint shape of " + name + " must hold nonnegative integers");
      shape.push_back(d.get<int>());
    }
    Tensor t(shape);
    std::string bytes = read_file(dir + "/" + name + ".bin");
    if (bytes.size() != t.numel() * 4)
      throw ManifestMismatch(name + ".bin", t.numel() * 4, bytes.size());
    t.data = decode_f32_array(bytes);
    params.emplace(name, std::move(t));
  }
  return params;
}

}  // namespace seupred
