#include "poseref/scene/model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace poseref {

void ObjectModel::update_diameter() {
  double best = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i)
    for (size_t j = i + 1; j < vertices.size(); ++j)
      best = std::max(best, (vertices[i] - vertices[j]).norm());
  diameter = best;
}

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
};

[[noreturn]] void fail(const std::string& path, std::streamoff offset, const std::string& what) {
  std::ostringstream msg;
  msg << "PLY parse error in " << path << " at byte " << offset << ": " << what;
  throw std::runtime_error(msg.str());
}

size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

double read_binary_scalar(std::istream& in, const std::string& type) {
  char buf[8];
  const size_t n = scalar_size(type);
  in.read(buf, static_cast<std::streamsize>(n));
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "double" || type == "float64") {
    double v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  if (type == "char" || type == "int8") return static_cast<int8_t>(buf[0]);
  if (type == "uchar" || type == "uint8") return static_cast<uint8_t>(buf[0]);
  if (type == "short" || type == "int16") {
    int16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    uint16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    int32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  uint32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

}  // namespace

ObjectModel load_model(const std::string& path, const LoadModelOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) fail(path, 0, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") fail(path, 0, "missing 'ply' magic");

  enum class Format { kAscii, kBinaryLE } format = Format::kAscii;
  bool format_seen = false;
  std::vector<PlyElement> elements;
  while (true) {
    const std::streamoff off = in.tellg();
    if (!std::getline(in, line)) fail(path, off, "unterminated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (token == "comment" || token.empty()) continue;
    if (token == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") format = Format::kAscii;
      else if (fmt == "binary_little_endian") format = Format::kBinaryLE;
      else fail(path, off, "unsupported format '" + fmt + "'");
      format_seen = true;
    } else if (token == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (token == "property") {
      if (elements.empty()) fail(path, off, "property before element");
      PlyProperty prop;
      ls >> prop.type;
      if (prop.type == "list") {
        prop.is_list = true;
        ls >> prop.count_type >> prop.type >> prop.name;
      } else {
        ls >> prop.name;
      }
      if (!prop.is_list && scalar_size(prop.type) == 0)
        fail(path, off, "unknown property type '" + prop.type + "'");
      elements.back().properties.push_back(prop);
    } else if (token == "end_header") {
      break;
    } else {
      fail(path, off, "unexpected header token '" + token + "'");
    }
  }
  if (!format_seen) fail(path, in.tellg(), "header lacks a format line");

  ObjectModel model;
  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1;
    if (is_vertex) {
      for (size_t i = 0; i < el.properties.size(); ++i) {
        const PlyProperty& p = el.properties[i];
        if (p.name == "x") ix = static_cast<int>(i);
        if (p.name == "y") iy = static_cast<int>(i);
        if (p.name == "z") iz = static_cast<int>(i);
        if ((p.name == "x" || p.name == "y" || p.name == "z") &&
            p.type != "float" && p.type != "float32" && p.type != "double" &&
            p.type != "float64")
          fail(path, in.tellg(), "vertex position property '" + p.name + "' is not float");
      }
      if (ix < 0 || iy < 0 || iz < 0) fail(path, in.tellg(), "vertex element lacks x/y/z");
      model.vertices.reserve(el.count);
    }

    for (size_t e = 0; e < el.count; ++e) {
      const std::streamoff off = in.tellg();
      std::vector<double> scalars(el.properties.size(), 0.0);
      std::vector<long> list_values;
      if (format == Format::kAscii) {
        if (!std::getline(in, line)) fail(path, off, "unexpected end of data");
        std::istringstream ls(line);
        for (size_t p = 0; p < el.properties.size(); ++p) {
          if (el.properties[p].is_list) {
            long n;
            if (!(ls >> n)) fail(path, off, "bad list count");
            list_values.resize(n);
            for (long k = 0; k < n; ++k)
              if (!(ls >> list_values[k])) fail(path, off, "truncated list");
          } else {
            if (!(ls >> scalars[p])) fail(path, off, "truncated element row");
          }
        }
      } else {
        for (size_t p = 0; p < el.properties.size(); ++p) {
          const PlyProperty& prop = el.properties[p];
          if (prop.is_list) {
            const long n = static_cast<long>(read_binary_scalar(in, prop.count_type));
            if (!in) fail(path, off, "truncated list count");
            list_values.resize(n);
            for (long k = 0; k < n; ++k) {
              list_values[k] = static_cast<long>(read_binary_scalar(in, prop.type));
              if (!in) fail(path, off, "truncated list");
            }
          } else {
            scalars[p] = read_binary_scalar(in, prop.type);
            if (!in) fail(path, off, "truncated element row");
          }
        }
      }

      if (is_vertex) {
        model.vertices.emplace_back(scalars[ix] * opts.unit_scale,
                                    scalars[iy] * opts.unit_scale,
                                    scalars[iz] * opts.unit_scale);
      } else if (is_face && !list_values.empty()) {
        if (list_values.size() < 3) fail(path, off, "face with fewer than 3 indices");
        // Fan-triangulate polygons.
        for (size_t k = 2; k < list_values.size(); ++k)
          model.triangles.push_back({static_cast<int>(list_values[0]),
                                     static_cast<int>(list_values[k - 1]),
                                     static_cast<int>(list_values[k])});
      }
    }
  }

  if (model.vertices.empty()) fail(path, in.tellg(), "mesh has no vertices");
  for (const auto& tri : model.triangles)
    for (int idx : tri)
      if (idx < 0 || idx >= static_cast<int>(model.vertices.size()))
        throw std::runtime_error("load_model: face index out of range in " + path);

  if (!opts.symmetries_path.empty()) model.symmetries = load_symmetries(opts.symmetries_path);
  model.update_diameter();
  return model;
}

void save_model_ply(const ObjectModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model_ply: cannot open " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << model.vertices.size() << "\n";
  out << "property float64 x\nproperty float64 y\nproperty float64 z\n";
  if (!model.triangles.empty()) {
    out << "element face " << model.triangles.size() << "\n";
    out << "property list uchar int32 vertex_indices\n";
  }
  out << "end_header\n";
  for (const Eigen::Vector3d& v : model.vertices) {
    const double xyz[3] = {v.x(), v.y(), v.z()};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (const auto& tri : model.triangles) {
    const uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    const int32_t idx[3] = {tri[0], tri[1], tri[2]};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
}

std::vector<RigidTransform> load_symmetries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_symmetries: cannot open " + path);
  nlohmann::json j;
  in >> j;
  const auto& list = j.contains("symmetries") ? j.at("symmetries") : j;
  std::vector<RigidTransform> out;
  for (const auto& item : list) {
    if (item.size() != 16)
      throw std::runtime_error("load_symmetries: expected 16 entries per matrix");
    Eigen::Matrix4d T;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) T(r, c) = item.at(r * 4 + c).get<double>();
    out.push_back(RigidTransform::from_matrix(T));
  }
  bool has_identity = false;
  for (const auto& s : out)
    if (rotation_geodesic_distance(s, RigidTransform::identity()) < 1e-12 &&
        s.translation.norm() < 1e-12)
      has_identity = true;
  if (!has_identity) out.insert(out.begin(), RigidTransform::identity());
  return out;
}

void save_symmetries(const std::vector<RigidTransform>& symmetries, const std::string& path) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : symmetries) {
    const Eigen::Matrix4d T = s.matrix();
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m.push_back(T(r, c));
    list.push_back(m);
  }
  nlohmann::json j{{"schema", "poseref/symmetries/1"}, {"symmetries", list}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_symmetries: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace poseref
