// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace surfrec::io {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail_io(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

[[noreturn]] void fail_schema(const std::string& path,
                              const std::string& what) {
  throw SchemaError(path + ": " + what);
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) fail_io(path, "cannot open for writing");
  return f;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) fail_io(path, "cannot open for reading");
  return f;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string lower_ext(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

// -- PFM ---------------------------------------------------------------------

void write_pfm(const std::string& path, const ImageGrid& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_pfm: needs 1 or 3 channels");
  }
  if (img.pixel_count() == 0) throw std::invalid_argument("write_pfm: empty");
  std::ofstream f = open_out(path, true);
  f << (img.channels == 3 ? "PF" : "Pf") << "\n"
    << img.width << " " << img.height << "\n-1\n";
  std::vector<float> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        row[static_cast<std::size_t>(x) * img.channels + c] =
            static_cast<float>(img.at(y, x, c));
      }
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!f) fail_io(path, "write failed");
}

ImageGrid read_pfm(const std::string& path) {
  std::ifstream f = open_in(path, true);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0;
  f >> magic >> width >> height >> scale;
  if (!f || (magic != "PF" && magic != "Pf")) {
    fail_schema(path, "not a PFM file");
  }
  if (width <= 0 || height <= 0) fail_schema(path, "bad PFM dimensions");
  if (scale >= 0) fail_schema(path, "big-endian PFM not supported");
  f.get();  // single whitespace separating header from data
  const int channels = magic == "PF" ? 3 : 1;
  ImageGrid img(height, width, channels);
  std::vector<float> row(static_cast<std::size_t>(width) * channels);
  for (int y = height - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!f) fail_schema(path, "truncated PFM data");
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(y, x, c) = row[static_cast<std::size_t>(x) * channels + c];
      }
    }
  }
  return img;
}

// -- PNG ---------------------------------------------------------------------

void write_png(const std::string& path, const ImageGrid& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_png: needs 1 or 3 channels");
  }
  if (img.pixel_count() == 0) throw std::invalid_argument("write_png: empty");
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0,
                               nullptr)) {
    fail_io(path, std::string("PNG write failed: ") + image.message);
  }
}

ImageGrid read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    fail_schema(path, std::string("PNG read failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    fail_schema(path, std::string("PNG decode failed: ") + image.message);
  }
  ImageGrid img(static_cast<int>(image.height), static_cast<int>(image.width),
                3);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = bytes[i] / 255.0;
  }
  return img;
}

// -- PLY helpers -------------------------------------------------------------

namespace {

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  std::vector<PlyElement> elements;
};

PlyHeader read_ply_header(std::ifstream& f, const std::string& path) {
  std::string line;
  if (!std::getline(f, line) || line != "ply") fail_schema(path, "not a PLY file");
  if (!std::getline(f, line) || line.rfind("format ascii", 0) != 0) {
    fail_schema(path, "only ascii PLY is supported");
  }
  PlyHeader header;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "end_header") return header;
    if (tok == "element") {
      PlyElement el;
      ss >> el.name >> el.count;
      if (!ss) fail_schema(path, "bad element line: " + line);
      header.elements.push_back(std::move(el));
    } else if (tok == "property") {
      if (header.elements.empty()) fail_schema(path, "property before element");
      PlyProperty prop;
      std::string type;
      ss >> type;
      if (type == "list") {
        prop.is_list = true;
        std::string count_type, value_type;
        ss >> count_type >> value_type >> prop.name;
      } else {
        ss >> prop.name;
      }
      if (!ss) fail_schema(path, "bad property line: " + line);
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      fail_schema(path, "unexpected header token: " + tok);
    }
  }
  fail_schema(path, "missing end_header");
}

int property_index(const PlyElement& el, const std::string& name,
                   const std::string& path) {
  for (std::size_t i = 0; i < el.properties.size(); ++i) {
    if (el.properties[i].name == name) {
      if (el.properties[i].is_list) {
        fail_schema(path, "property '" + name + "' must be scalar");
      }
      return static_cast<int>(i);
    }
  }
  fail_schema(path, "missing property '" + name + "'");
}

}  // namespace

// -- Triangle meshes ---------------------------------------------------------

void write_mesh_ply(const std::string& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::ofstream f = open_out(path, true);
  f << "ply\nformat ascii 1.0\n"
    << "element vertex " << mesh.vertices.size() << "\n"
    << "property double x\nproperty double y\nproperty double z\n"
    << "element face " << mesh.faces.size() << "\n"
    << "property list uchar int vertex_indices\n"
    << "end_header\n";
  for (const Vec3& v : mesh.vertices) {
    f << fmt_double(v.x()) << " " << fmt_double(v.y()) << " "
      << fmt_double(v.z()) << "\n";
  }
  for (const auto& face : mesh.faces) {
    f << "3 " << face[0] << " " << face[1] << " " << face[2] << "\n";
  }
  if (!f) fail_io(path, "write failed");
}

TriangleMesh read_mesh_ply(const std::string& path) {
  std::ifstream f = open_in(path, true);
  const PlyHeader header = read_ply_header(f, path);
  TriangleMesh mesh;
  for (const PlyElement& el : header.elements) {
    if (el.name == "vertex") {
      const int ix = property_index(el, "x", path);
      const int iy = property_index(el, "y", path);
      const int iz = property_index(el, "z", path);
      std::vector<double> row(el.properties.size());
      for (std::size_t i = 0; i < el.count; ++i) {
        for (double& v : row) {
          if (!(f >> v)) fail_schema(path, "truncated vertex data");
        }
        mesh.vertices.emplace_back(row[ix], row[iy], row[iz]);
      }
    } else if (el.name == "face") {
      for (std::size_t i = 0; i < el.count; ++i) {
        int count = 0;
        if (!(f >> count) || count < 3) fail_schema(path, "bad face record");
        std::vector<int> ids(count);
        for (int& id : ids) {
          if (!(f >> id)) fail_schema(path, "truncated face data");
        }
        for (int k = 1; k + 1 < count; ++k) {
          mesh.faces.push_back({ids[0], ids[k], ids[k + 1]});
        }
      }
    } else {
      // Skip one whitespace-separated token per scalar property.
      std::string tok;
      for (std::size_t i = 0; i < el.count; ++i) {
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          if (!(f >> tok)) fail_schema(path, "truncated element " + el.name);
        }
      }
    }
  }
  try {
    mesh.validate();
  } catch (const std::exception& e) {
    fail_schema(path, e.what());
  }
  return mesh;
}

void write_mesh_obj(const std::string& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::ofstream f = open_out(path, true);
  for (const Vec3& v : mesh.vertices) {
    f << "v " << fmt_double(v.x()) << " " << fmt_double(v.y()) << " "
      << fmt_double(v.z()) << "\n";
  }
  for (const auto& face : mesh.faces) {
    f << "f " << face[0] + 1 << " " << face[1] + 1 << " " << face[2] + 1
      << "\n";
  }
  if (!f) fail_io(path, "write failed");
}

TriangleMesh read_mesh_obj(const std::string& path) {
  std::ifstream f = open_in(path, false);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) fail_schema(path, "bad vertex line: " + line);
      mesh.vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<int> ids;
      std::string ref;
      while (ss >> ref) {
        // "v", "v/vt", "v//vn", "v/vt/vn": the vertex id leads.
        const int id = std::atoi(ref.c_str());
        if (id == 0) fail_schema(path, "bad face reference: " + ref);
        const int n = static_cast<int>(mesh.vertices.size());
        ids.push_back(id > 0 ? id - 1 : n + id);
      }
      if (ids.size() < 3) fail_schema(path, "face with <3 vertices");
      for (std::size_t k = 1; k + 1 < ids.size(); ++k) {
        mesh.faces.push_back({ids[0], static_cast<int>(ids[k]),
                              static_cast<int>(ids[k + 1])});
      }
    }
  }
  try {
    mesh.validate();
  } catch (const std::exception& e) {
    fail_schema(path, e.what());
  }
  return mesh;
}

TriangleMesh read_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ply") return read_mesh_ply(path);
  if (ext == "obj") return read_mesh_obj(path);
  fail_schema(path, "unsupported mesh extension '" + ext + "'");
}

// -- Splat fields ------------------------------------------------------------

namespace {
const char* const kSplatProps[] = {"x",  "y",  "z",  "s0",    "s1",
                                   "qw", "qx", "qy", "qz",    "alpha",
                                   "red", "green", "blue"};
constexpr int kSplatPropCount = 13;
}  // namespace

void write_splats_ply(const std::string& path, const SplatField& field) {
  field.validate();
  std::ofstream f = open_out(path, true);
  f << "ply\nformat ascii 1.0\n"
    << "element vertex " << field.splats.size() << "\n";
  for (const char* name : kSplatProps) f << "property double " << name << "\n";
  f << "end_header\n";
  for (const Splat2D& s : field.splats) {
    const double vals[kSplatPropCount] = {
        s.mu.x(),  s.mu.y(),  s.mu.z(),  s.scale.x(), s.scale.y(),
        s.q.w(),   s.q.x(),   s.q.y(),   s.q.z(),     s.alpha,
        s.color.x(), s.color.y(), s.color.z()};
    for (int i = 0; i < kSplatPropCount; ++i) {
      f << (i ? " " : "") << fmt_double(vals[i]);
    }
    f << "\n";
  }
  if (!f) fail_io(path, "write failed");
}

SplatField read_splats_ply(const std::string& path) {
  std::ifstream f = open_in(path, true);
  const PlyHeader header = read_ply_header(f, path);
  SplatField field;
  for (const PlyElement& el : header.elements) {
    if (el.name != "vertex") fail_schema(path, "unexpected element " + el.name);
    int cols[kSplatPropCount];
    for (int i = 0; i < kSplatPropCount; ++i) {
      cols[i] = property_index(el, kSplatProps[i], path);
    }
    std::vector<double> row(el.properties.size());
    field.splats.reserve(el.count);
    for (std::size_t i = 0; i < el.count; ++i) {
      for (double& v : row) {
        if (!(f >> v)) fail_schema(path, "truncated splat data");
      }
      Splat2D s;
      s.mu = Vec3(row[cols[0]], row[cols[1]], row[cols[2]]);
      s.scale = {row[cols[3]], row[cols[4]]};
      s.q = Quat(row[cols[5]], row[cols[6]], row[cols[7]], row[cols[8]]);
      s.alpha = row[cols[9]];
      s.color = Vec3(row[cols[10]], row[cols[11]], row[cols[12]]);
      field.splats.push_back(s);
    }
  }
  try {
    field.validate();
  } catch (const std::exception& e) {
    fail_schema(path, e.what());
  }
  return field;
}

// -- Cameras -----------------------------------------------------------------

void write_cameras_json(const std::string& path,
                        const std::vector<CameraRecord>& cameras) {
  ordered_json root;
  root["cameras"] = ordered_json::array();
  for (const CameraRecord& cam : cameras) {
    cam.intrinsics.validate();
    cam.pose.validate();
    ordered_json j;
    j["fx"] = cam.intrinsics.fx;
    j["fy"] = cam.intrinsics.fy;
    j["cx"] = cam.intrinsics.cx;
    j["cy"] = cam.intrinsics.cy;
    j["width"] = cam.intrinsics.width;
    j["height"] = cam.intrinsics.height;
    j["quaternion"] = {cam.pose.q.w(), cam.pose.q.x(), cam.pose.q.y(),
                       cam.pose.q.z()};
    j["translation"] = {cam.pose.t.x(), cam.pose.t.y(), cam.pose.t.z()};
    j["near"] = cam.near;
    j["far"] = cam.far;
    root["cameras"].push_back(std::move(j));
  }
  std::ofstream f = open_out(path, true);
  f << root.dump(2) << "\n";
  if (!f) fail_io(path, "write failed");
}

std::vector<CameraRecord> read_cameras_json(const std::string& path) {
  std::ifstream f = open_in(path, true);
  ordered_json root;
  try {
    root = ordered_json::parse(f);
  } catch (const std::exception& e) {
    fail_schema(path, std::string("JSON parse error: ") + e.what());
  }
  if (!root.is_object() || !root.contains("cameras") ||
      !root["cameras"].is_array()) {
    fail_schema(path, "missing top-level 'cameras' array");
  }
  std::vector<CameraRecord> out;
  std::size_t index = 0;
  for (const auto& j : root["cameras"]) {
    const std::string where = "camera " + std::to_string(index);
    const auto number = [&](const char* key) -> double {
      if (!j.contains(key) || !j[key].is_number()) {
        fail_schema(path, where + ": missing numeric field '" + key + "'");
      }
      return j[key].get<double>();
    };
    const auto array = [&](const char* key, std::size_t len) {
      if (!j.contains(key) || !j[key].is_array() || j[key].size() != len) {
        fail_schema(path, where + ": field '" + key + "' must be an array of " +
                              std::to_string(len) + " numbers");
      }
      std::vector<double> v;
      for (const auto& x : j[key]) {
        if (!x.is_number()) {
          fail_schema(path, where + ": field '" + key + "' must be numeric");
        }
        v.push_back(x.get<double>());
      }
      return v;
    };
    CameraRecord cam;
    cam.intrinsics.fx = number("fx");
    cam.intrinsics.fy = number("fy");
    cam.intrinsics.cx = number("cx");
    cam.intrinsics.cy = number("cy");
    cam.intrinsics.width = static_cast<int>(number("width"));
    cam.intrinsics.height = static_cast<int>(number("height"));
    const std::vector<double> q = array("quaternion", 4);
    const std::vector<double> t = array("translation", 3);
    cam.pose.q = Quat(q[0], q[1], q[2], q[3]);
    cam.pose.t = Vec3(t[0], t[1], t[2]);
    cam.near = number("near");
    cam.far = number("far");
    try {
      cam.intrinsics.validate();
      cam.pose.validate();
      if (!(cam.near > 0) || !(cam.far > cam.near)) {
        throw std::invalid_argument("need 0 < near < far");
      }
    } catch (const std::exception& e) {
      fail_schema(path, where + ": " + e.what());
    }
    out.push_back(cam);
    ++index;
  }
  return out;
}

}  // namespace surfrec::io
