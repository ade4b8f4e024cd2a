#pragma once

#include "graspcov/core/error.hpp"
#include "graspcov/mesh/trimesh.hpp"

#include <cstdint>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace graspcov {

/// Mesh files store metres; this converts them to the toolkit's millimetres.
inline constexpr double kMetresToMillimetres = 1000.0;

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

namespace detail {

inline TriMesh parse_obj(const std::string& text, double scale, const std::string& name) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ParseError, name + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x = 0, y = 0, z = 0;
      if (!(ls >> x >> y >> z)) fail("malformed vertex");
      vertices.emplace_back(scale * x, scale * y, scale * z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ls >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        long idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stol(head, &used);
          if (used != head.size()) fail("malformed face index '" + tok + "'");
        } catch (const std::logic_error&) {
          fail("malformed face index '" + tok + "'");
        }
        if (idx < 0) idx = static_cast<long>(vertices.size()) + idx + 1;
        if (idx <= 0 || static_cast<std::size_t>(idx) > vertices.size())
          fail("face index " + head + " out of range");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      if (poly.size() < 3) fail("face with fewer than three vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (faces.empty()) throw Error(ErrorCode::EmptyMesh, name + ": no faces");
  return TriMesh(std::move(vertices), std::move(faces));
}

// STL carries no connectivity; identical coordinates are welded so that
// closed solids are recognised as watertight.
class VertexWelder {
 public:
  std::uint32_t add(const Vec3& v) {
    const std::array<double, 3> key{v.x(), v.y(), v.z()};
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(vertices.size()));
    if (inserted) vertices.push_back(v);
    return it->second;
  }
  std::vector<Vec3> vertices;

 private:
  std::map<std::array<double, 3>, std::uint32_t> index_;
};

inline TriMesh parse_stl_binary(const std::string& bytes, double scale, const std::string& name) {
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, 4);
  VertexWelder welder;
  std::vector<Face> faces;
  faces.reserve(count);
  const char* p = bytes.data() + 84;
  for (std::uint32_t i = 0; i < count; ++i, p += 50) {
    Face f{};
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, p + 12 + 12 * k, 12);
      f[k] = welder.add(Vec3(scale * xyz[0], scale * xyz[1], scale * xyz[2]));
    }
    faces.push_back(f);
  }
  if (faces.empty()) throw Error(ErrorCode::EmptyMesh, name + ": no facets");
  return TriMesh(std::move(welder.vertices), std::move(faces));
}

inline TriMesh parse_stl_ascii(const std::string& text, double scale, const std::string& name) {
  VertexWelder welder;
  std::vector<Face> faces;
  std::istringstream in(text);
  std::string tok;
  std::vector<std::uint32_t> loop;
  while (in >> tok) {
    if (tok == "vertex") {
      double x = 0, y = 0, z = 0;
      if (!(in >> x >> y >> z)) throw Error(ErrorCode::ParseError, name + ": malformed vertex");
      loop.push_back(welder.add(Vec3(scale * x, scale * y, scale * z)));
    } else if (tok == "endloop") {
      if (loop.size() != 3)
        throw Error(ErrorCode::ParseError, name + ": facet without exactly three vertices");
      faces.push_back({loop[0], loop[1], loop[2]});
      loop.clear();
    }
  }
  if (faces.empty()) throw Error(ErrorCode::EmptyMesh, name + ": no facets");
  return TriMesh(std::move(welder.vertices), std::move(faces));
}

}  // namespace detail

/// Loads a Wavefront OBJ or STL (binary or ASCII) file. Coordinates are
/// multiplied by `scale` (metres to millimetres by default).
inline TriMesh load_mesh(const std::filesystem::path& path, double scale = kMetresToMillimetres) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(ErrorCode::FileNotFound, "mesh file '" + path.string() + "' does not exist");
  const std::string bytes = read_file_bytes(path);
  const std::string name = path.string();
  const std::string ext = lowercase_extension(path);
  if (ext == ".obj") return detail::parse_obj(bytes, scale, name);
  if (ext == ".stl") {
    if (bytes.size() >= 84) {
      std::uint32_t count = 0;
      std::memcpy(&count, bytes.data() + 80, 4);
      if (bytes.size() == 84 + 50ull * count) return detail::parse_stl_binary(bytes, scale, name);
    }
    if (bytes.rfind("solid", 0) == 0) return detail::parse_stl_ascii(bytes, scale, name);
    throw Error(ErrorCode::ParseError, name + ": neither binary nor ASCII STL");
  }
  throw Error(ErrorCode::ParseError, name + ": unsupported mesh extension '" + ext + "'");
}

/// Writes an OBJ, dividing coordinates by `scale` (millimetres to metres by default).
inline void write_obj(const TriMesh& mesh, const std::filesystem::path& path,
                      double scale = kMetresToMillimetres) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices())
    out << "v " << v.x() / scale << ' ' << v.y() / scale << ' ' << v.z() / scale << '\n';
  for (const Face& f : mesh.faces())
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace graspcov
