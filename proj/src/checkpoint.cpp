#include "rare/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "rare/error.hpp"

namespace rare {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'R', 'E', 'C', 'K', 'P', 'T'};

void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) {
    throw Error(ErrorCode::kSchemaValidation, "truncated checkpoint");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

void commit(const std::filesystem::path& tmp, const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
}

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  ensure_parent(path);
  const auto tmp = temp_sibling(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    os << text;
    if (!os.flush()) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  commit(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const RunConfig& config,
                     const std::vector<EpochLog>& history) {
  nlohmann::json header;
  header["version"] = kCheckpointVersion;
  header["config"] = to_json(config);
  header["history"] = nlohmann::json::array();
  for (const auto& h : history) header["history"].push_back(to_json(h));

  std::vector<double> flat;
  auto& tensors = header["tensors"] = nlohmann::json::array();
  auto params = model.params;
  params.visit("", [&](std::string_view name, std::span<double> v) {
    tensors.push_back({{"name", std::string(name)}, {"size", v.size()}});
    flat.insert(flat.end(), v.begin(), v.end());
  });

  std::ostringstream os;
  os.write(kMagic, sizeof kMagic);
  write_u64(os, kCheckpointVersion);
  const auto text = header.dump();
  write_u64(os, text.size());
  os << text;
  write_u64(os, flat.size());
  for (double d : flat) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    write_u64(os, bits);
  }
  write_file_atomic(path, os.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kSchemaValidation, path.string() + " is not a checkpoint");
  }
  const auto version = read_u64(is);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kSchemaValidation,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_size = read_u64(is);
  std::string text(header_size, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(header_size))) {
    throw Error(ErrorCode::kSchemaValidation, "truncated checkpoint header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaValidation, std::string("bad checkpoint header: ") + e.what());
  }

  const auto config = config_from_json(header.at("config"));
  Model model(config.model, config.detector);
  std::vector<EpochLog> history;
  for (const auto& h : header.at("history")) history.push_back(epoch_log_from_json(h));

  const auto count = read_u64(is);
  const auto& tensors = header.at("tensors");
  std::size_t index = 0;
  std::uint64_t consumed = 0;
  model.params.visit("", [&](std::string_view name, std::span<double> v) {
    if (index >= tensors.size() || tensors[index].at("name").get<std::string>() != name ||
        tensors[index].at("size").get<std::size_t>() != v.size()) {
      throw Error(ErrorCode::kSchemaValidation,
                  "checkpoint tensor mismatch at " + std::string(name));
    }
    for (double& d : v) {
      const auto bits = read_u64(is);
      std::memcpy(&d, &bits, sizeof d);
    }
    consumed += v.size();
    ++index;
  });
  if (index != tensors.size() || consumed != count) {
    throw Error(ErrorCode::kSchemaValidation, "checkpoint tensor table does not match the model");
  }
  return {config, std::move(model), std::move(history)};
}

}  // namespace rare
