#include "freqadv/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "freqadv/errors.hpp"

namespace freqadv {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'F', 'A', 'D', 'V', 'C', 'K', 'P', '1'};

std::vector<char> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  return std::vector<char>(s.begin(), s.end());
}

const char* layer_type_name(LayerType t) {
  switch (t) {
    case LayerType::conv2d: return "conv2d";
    case LayerType::relu: return "relu";
    case LayerType::flatten: return "flatten";
    case LayerType::affine: return "affine";
  }
  return "?";
}

LayerType layer_type_from_name(const std::string& s) {
  if (s == "conv2d") return LayerType::conv2d;
  if (s == "relu") return LayerType::relu;
  if (s == "flatten") return LayerType::flatten;
  if (s == "affine") return LayerType::affine;
  throw io_error("checkpoint: unknown layer type " + s);
}

}  // namespace

std::uint8_t quantize_8bit(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::floor(clamped + 0.5));
}

std::vector<std::uint8_t> quantize_image(const Image& img) {
  std::vector<std::uint8_t> out(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out[i] = quantize_8bit(img.data[i]);
  }
  return out;
}

Image dequantize_image(const std::vector<std::uint8_t>& bytes, int h, int w,
                       int c) {
  if (bytes.size() != static_cast<std::size_t>(h) * w * c) {
    throw std::invalid_argument("dequantize_image: size mismatch");
  }
  Image img(h, w, c);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    img.data[i] = static_cast<double>(bytes[i]) / 255.0;
  }
  return img;
}

void write_pgm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("write_pgm: size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
}

void write_image_pnm(const std::string& path, const Image& img) {
  const auto bytes = quantize_image(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  if (img.channels == 1) {
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
  } else if (img.channels == 3) {
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
  } else {
    throw std::invalid_argument("write_image_pnm: channels must be 1 or 3");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

namespace {

// Minimal PNM token reader: skips whitespace and '#' comments.
long next_pnm_int(const std::vector<char>& buf, std::size_t& pos,
                  const std::string& path) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  long v = 0;
  bool any = false;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    v = v * 10 + (buf[pos] - '0');
    ++pos;
    any = true;
  }
  if (!any) throw io_error("malformed PNM header: " + path);
  return v;
}

}  // namespace

Image read_image_pnm(const std::string& path) {
  const auto buf = read_binary(path);
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) {
    throw io_error("not a binary PGM/PPM file: " + path);
  }
  const int channels = buf[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const long w = next_pnm_int(buf, pos, path);
  const long h = next_pnm_int(buf, pos, path);
  const long maxval = next_pnm_int(buf, pos, path);
  if (maxval != 255) throw io_error("PNM maxval must be 255: " + path);
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (buf.size() - pos < need) throw io_error("truncated PNM payload: " + path);
  std::vector<std::uint8_t> bytes(buf.begin() + pos, buf.begin() + pos + need);
  return dequantize_image(bytes, static_cast<int>(h), static_cast<int>(w),
                          channels);
}

void write_mask_pgm(const std::string& path, const SpectrumMask& mask) {
  std::vector<std::uint8_t> gray(mask.cells.size());
  for (std::size_t i = 0; i < mask.cells.size(); ++i) {
    gray[i] = mask.cells[i] ? 255 : 0;
  }
  write_pgm(path, mask.side, mask.side, gray);
}

void save_checkpoint(const std::string& path, const Model& model) {
  ordered_json header;
  header["version"] = 1;
  ordered_json arch;
  arch["input"] = {model.arch.input.height, model.arch.input.width,
                   model.arch.input.channels};
  arch["num_classes"] = model.arch.num_classes;
  ordered_json layers = ordered_json::array();
  for (const LayerSpec& l : model.arch.layers) {
    ordered_json lj;
    lj["type"] = layer_type_name(l.type);
    if (l.type == LayerType::conv2d) {
      lj["out_channels"] = l.out_channels;
      lj["kernel"] = l.kernel;
      lj["stride"] = l.stride;
      lj["pad"] = l.pad;
    } else if (l.type == LayerType::affine) {
      lj["out_features"] = l.out_features;
    }
    layers.push_back(std::move(lj));
  }
  arch["layers"] = std::move(layers);
  header["arch"] = std::move(arch);
  header["seed"] = model.init_seed;
  header["metadata"] = model.metadata;
  std::size_t param_doubles = 0;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    param_doubles += model.weights[i].size() + model.biases[i].size();
  }
  header["param_doubles"] = param_doubles;

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out.write(kMagic, 8);
  const std::uint32_t hlen = static_cast<std::uint32_t>(header_text.size());
  const unsigned char lenb[4] = {
      static_cast<unsigned char>(hlen & 0xff),
      static_cast<unsigned char>((hlen >> 8) & 0xff),
      static_cast<unsigned char>((hlen >> 16) & 0xff),
      static_cast<unsigned char>((hlen >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lenb), 4);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  // Little-endian doubles; this writer targets little-endian hosts.
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    out.write(reinterpret_cast<const char*>(model.weights[i].data()),
              static_cast<std::streamsize>(model.weights[i].size() * 8));
    out.write(reinterpret_cast<const char*>(model.biases[i].data()),
              static_cast<std::streamsize>(model.biases[i].size() * 8));
  }
  if (!out) throw io_error("short write on " + path);
}

Model load_checkpoint(const std::string& path) {
  const auto buf = read_binary(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 8) != 0) {
    throw io_error("not a freqadv checkpoint: " + path);
  }
  const std::uint32_t hlen =
      static_cast<std::uint8_t>(buf[8]) |
      (static_cast<std::uint8_t>(buf[9]) << 8) |
      (static_cast<std::uint8_t>(buf[10]) << 16) |
      (static_cast<std::uint8_t>(buf[11]) << 24);
  if (buf.size() < 12 + static_cast<std::size_t>(hlen)) {
    throw io_error("truncated checkpoint header: " + path);
  }
  ordered_json header;
  try {
    header = ordered_json::parse(buf.begin() + 12, buf.begin() + 12 + hlen);
  } catch (const std::exception& e) {
    throw io_error("bad checkpoint header in " + path + ": " + e.what());
  }
  if (header.value("version", 0) != 1) {
    throw io_error("unsupported checkpoint version in " + path);
  }

  Model model;
  const auto& arch = header.at("arch");
  const auto input = arch.at("input");
  model.arch.input = {input.at(0).get<int>(), input.at(1).get<int>(),
                      input.at(2).get<int>()};
  model.arch.num_classes = arch.at("num_classes").get<int>();
  for (const auto& lj : arch.at("layers")) {
    LayerSpec l;
    l.type = layer_type_from_name(lj.at("type").get<std::string>());
    if (l.type == LayerType::conv2d) {
      l.out_channels = lj.at("out_channels").get<int>();
      l.kernel = lj.at("kernel").get<int>();
      l.stride = lj.at("stride").get<int>();
      l.pad = lj.at("pad").get<int>();
    } else if (l.type == LayerType::affine) {
      l.out_features = lj.at("out_features").get<int>();
    }
    model.arch.layers.push_back(l);
  }
  model.init_seed = header.value("seed", std::uint64_t{0});
  if (header.contains("metadata")) {
    for (const auto& [k, v] : header.at("metadata").items()) {
      model.metadata[k] = v.get<std::string>();
    }
  }

  // Sizes come from the architecture; the recorded count cross-checks them.
  Model sized = init_model(model.arch, 0);
  std::size_t param_doubles = 0;
  for (std::size_t i = 0; i < sized.weights.size(); ++i) {
    param_doubles += sized.weights[i].size() + sized.biases[i].size();
  }
  if (header.at("param_doubles").get<std::size_t>() != param_doubles) {
    throw io_error("checkpoint parameter count mismatch: " + path);
  }
  if (buf.size() != 12 + hlen + param_doubles * 8) {
    throw io_error("checkpoint payload size mismatch: " + path);
  }
  model.weights = std::move(sized.weights);
  model.biases = std::move(sized.biases);
  const char* p = buf.data() + 12 + hlen;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    std::memcpy(model.weights[i].data(), p, model.weights[i].size() * 8);
    p += model.weights[i].size() * 8;
    std::memcpy(model.biases[i].data(), p, model.biases[i].size() * 8);
    p += model.biases[i].size() * 8;
  }
  return model;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << content;
  if (!out) throw io_error("short write on " + path);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace freqadv
