#pragma once

// Reference set persistence.
//
// Binary layout (little-endian):
//   magic "GCOVREF\0", u32 version, u32 header_bytes
//   header: grid (f64 translation_step, rotation_step, bounds min xyz, max xyz)
//           gripper (f64 max_opening, finger_length, finger_box xyz, palm_box xyz,
//                    closing xyz, approach xyz, contact_spacing)
//           f64 mu, f64 omega, f64 robustness_eps, u8 neighbourhood, u8 has_robustness,
//           u64 enumerated, u64 count, 64-byte ASCII reference hash,
//           u32 + bytes object_id, u32 + bytes oracle_version
//   arrays of `count` entries, each array contiguous:
//           pose (f64 px py pz qw qx qy qz), u64 grid index, u8 label bits
//           (bit 0 valid, bit 1 success), f32 jaw width, f32 quality,
//           f32 robustness, u32 robust successes, u32 robust neighbours
//
// The u32 counts are the source of truth for robustness on load; the f32
// column is kept for external readers.

#include "graspcov/core/error.hpp"
#include "graspcov/oracle/oracle.hpp"
#include "graspcov/pipeline/config.hpp"
#include "graspcov/pipeline/hash.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace graspcov {

static_assert(std::endian::native == std::endian::little, "reference files assume a little-endian host");

inline constexpr char kReferenceMagic[8] = {'G', 'C', 'O', 'V', 'R', 'E', 'F', '\0'};
inline constexpr std::uint32_t kReferenceFormatVersion = 1;

/// Writes `bytes` to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put(const Vec3& v) {
    for (int i = 0; i < 3; ++i) put(v[i]);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void put_raw(const char* data, std::size_t n) { buf_.append(data, n); }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Vec3 get_vec3() {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = get<double>();
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string get_raw(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::ParseError, name_ + ": truncated reference file");
  }
  std::string_view bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Reference set with the hash of the config inputs that produced it.
struct StoredReference {
  ReferenceSet set;
  std::string reference_hash;
};

inline std::string serialize_reference(const ReferenceSet& ref, const std::string& reference_hash) {
  if (reference_hash.size() != 64) throw Error(ErrorCode::InvalidArgument, "reference hash must be 64 hex chars");
  const std::size_t n = ref.poses.size();
  if (ref.labels.size() != n || ref.grid_index.size() != n)
    throw Error(ErrorCode::InvalidArgument, "reference set arrays differ in length");
  const bool robust = ref.has_robustness();

  detail::ByteWriter h;
  h.put(ref.grid.translation_step);
  h.put(ref.grid.rotation_step);
  h.put(ref.grid.bounds.min);
  h.put(ref.grid.bounds.max);
  const GripperSpec& g = ref.gripper;
  h.put(g.max_opening);
  h.put(g.finger_length);
  h.put(g.finger_box);
  h.put(g.palm_box);
  h.put(g.closing_axis);
  h.put(g.approach_axis);
  h.put(g.contact_spacing);
  h.put(ref.mu);
  h.put(ref.omega);
  h.put(ref.robustness_eps);
  h.put(static_cast<std::uint8_t>(ref.neighbourhood == NeighbourhoodMode::Enumerated));
  h.put(static_cast<std::uint8_t>(robust));
  h.put(ref.enumerated);
  h.put(static_cast<std::uint64_t>(n));
  h.put_raw(reference_hash.data(), reference_hash.size());
  h.put_string(ref.object_id);
  h.put_string(ref.oracle_version);

  detail::ByteWriter w;
  w.put_raw(kReferenceMagic, sizeof kReferenceMagic);
  w.put(kReferenceFormatVersion);
  w.put(static_cast<std::uint32_t>(h.bytes().size()));
  w.put_raw(h.bytes().data(), h.bytes().size());
  w.bytes().reserve(w.bytes().size() + n * (56 + 8 + 1 + 12 + 8));
  for (const Pose& p : ref.poses) {
    w.put(p.p);
    w.put(p.q.w());
    w.put(p.q.x());
    w.put(p.q.y());
    w.put(p.q.z());
  }
  for (std::uint64_t i : ref.grid_index) w.put(i);
  for (const GraspLabel& l : ref.labels)
    w.put(static_cast<std::uint8_t>((l.valid() ? 1 : 0) | (l.success ? 2 : 0)));
  for (const GraspLabel& l : ref.labels) w.put(static_cast<float>(l.jaw_width));
  for (const GraspLabel& l : ref.labels) w.put(static_cast<float>(l.quality));
  for (std::size_t i = 0; i < n; ++i) w.put(static_cast<float>(robust ? ref.robustness[i] : 0.0));
  for (std::size_t i = 0; i < n; ++i) w.put(robust ? ref.robust_successes[i] : std::uint32_t{0});
  for (std::size_t i = 0; i < n; ++i) w.put(robust ? ref.robust_neighbours[i] : std::uint32_t{0});
  return std::move(w.bytes());
}

inline StoredReference deserialize_reference(std::string_view bytes, const std::string& name = "reference") {
  detail::ByteReader r(bytes, name);
  if (r.get_raw(sizeof kReferenceMagic) != std::string_view(kReferenceMagic, sizeof kReferenceMagic))
    throw Error(ErrorCode::ParseError, name + ": not a reference file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kReferenceFormatVersion)
    throw Error(ErrorCode::ParseError, name + ": unsupported reference format version " + std::to_string(version));
  const auto header_bytes = r.get<std::uint32_t>();
  const std::size_t header_end = r.position() + header_bytes;

  StoredReference out;
  ReferenceSet& ref = out.set;
  ref.grid.translation_step = r.get<double>();
  ref.grid.rotation_step = r.get<double>();
  ref.grid.bounds.min = r.get_vec3();
  ref.grid.bounds.max = r.get_vec3();
  GripperSpec& g = ref.gripper;
  g.max_opening = r.get<double>();
  g.finger_length = r.get<double>();
  g.finger_box = r.get_vec3();
  g.palm_box = r.get_vec3();
  g.closing_axis = r.get_vec3();
  g.approach_axis = r.get_vec3();
  g.contact_spacing = r.get<double>();
  ref.mu = r.get<double>();
  ref.omega = r.get<double>();
  ref.robustness_eps = r.get<double>();
  ref.neighbourhood = r.get<std::uint8_t>() ? NeighbourhoodMode::Enumerated : NeighbourhoodMode::Valid;
  const bool robust = r.get<std::uint8_t>() != 0;
  ref.enumerated = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  out.reference_hash = r.get_raw(64);
  ref.object_id = r.get_string();
  ref.oracle_version = r.get_string();
  if (r.position() != header_end) throw Error(ErrorCode::ParseError, name + ": header size mismatch");

  constexpr std::size_t kPerEntry = 7 * 8 + 8 + 1 + 4 + 4 + 4 + 4 + 4;
  if (r.remaining() != n * kPerEntry)
    throw Error(ErrorCode::ParseError, name + ": payload size does not match the grasp count");
  ref.poses.resize(n);
  for (Pose& p : ref.poses) {
    p.p = r.get_vec3();
    const double w = r.get<double>(), x = r.get<double>(), y = r.get<double>(), z = r.get<double>();
    p.q = Quat(w, x, y, z);
  }
  ref.grid_index.resize(n);
  for (auto& i : ref.grid_index) i = r.get<std::uint64_t>();
  ref.labels.resize(n);
  for (GraspLabel& l : ref.labels) {
    const auto bits = r.get<std::uint8_t>();
    l.validity = (bits & 1) ? Validity::Valid : Validity::EmptyClosingRegion;
    l.success = (bits & 2) != 0;
  }
  for (GraspLabel& l : ref.labels) l.jaw_width = r.get<float>();
  for (GraspLabel& l : ref.labels) l.quality = r.get<float>();
  std::vector<float> rob(n);
  for (float& v : rob) v = r.get<float>();
  std::vector<std::uint32_t> s(n), k(n);
  for (auto& v : s) v = r.get<std::uint32_t>();
  for (auto& v : k) v = r.get<std::uint32_t>();
  if (robust) {
    ref.robust_successes = std::move(s);
    ref.robust_neighbours = std::move(k);
    ref.robustness.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      ref.robustness[i] = ref.robust_neighbours[i] == 0
                              ? 0.0
                              : static_cast<double>(ref.robust_successes[i]) / ref.robust_neighbours[i];
  }
  return out;
}

inline std::filesystem::path reference_file(const std::filesystem::path& dir, const std::string& object_id) {
  return dir / (object_id + ".gref");
}

inline std::filesystem::path reference_sidecar(const std::filesystem::path& dir, const std::string& object_id) {
  return dir / (object_id + ".json");
}

inline Json reference_summary(const ReferenceSet& ref, const std::string& reference_hash,
                              const std::string& file_sha256) {
  std::uint64_t robust_half = 0;
  if (ref.has_robustness())
    for (std::size_t i = 0; i < ref.poses.size(); ++i) robust_half += ref.labels[i].success && ref.robustness[i] >= 0.5;
  const auto v = [](const Vec3& x) { return Json::array({x.x(), x.y(), x.z()}); };
  return {{"format_version", kReferenceFormatVersion},
          {"object_id", ref.object_id},
          {"oracle_version", ref.oracle_version},
          {"reference_hash", reference_hash},
          {"file_sha256", file_sha256},
          {"grid",
           {{"translation_step", ref.grid.translation_step},
            {"rotation_step", ref.grid.rotation_step},
            {"bounds_min", v(ref.grid.bounds.min)},
            {"bounds_max", v(ref.grid.bounds.max)}}},
          {"gripper", to_json(ref.gripper)},
          {"mu", ref.mu},
          {"omega", ref.omega},
          {"robustness_eps", ref.has_robustness() ? Json(ref.robustness_eps) : Json(nullptr)},
          {"neighbourhood", std::string(to_string(ref.neighbourhood))},
          {"counts",
           {{"enumerated", ref.enumerated},
            {"valid", ref.valid_count()},
            {"success", ref.success_count()},
            {"robust_at_0.5", robust_half}}}};
}

/// Writes `<dir>/<id>.gref` and its JSON sidecar. The sidecar goes last, so
/// its presence marks a complete reference.
inline Json save_reference(const ReferenceSet& ref, const std::filesystem::path& dir,
                           const std::string& reference_hash) {
  const std::string bytes = serialize_reference(ref, reference_hash);
  write_file_atomic(reference_file(dir, ref.object_id), bytes);
  Json summary = reference_summary(ref, reference_hash, sha256_hex(bytes));
  write_file_atomic(reference_sidecar(dir, ref.object_id), summary.dump(2) + "\n");
  return summary;
}

inline StoredReference load_reference(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(ErrorCode::FileNotFound, "reference file not found: " + path.string());
  return deserialize_reference(read_file_bytes(path), path.string());
}

/// Loads the reference for `object_id` from `dir`, checking it against the
/// expected hash.
inline ReferenceSet load_matching_reference(const std::filesystem::path& dir, const std::string& object_id,
                                            const std::string& expected_hash) {
  StoredReference s = load_reference(reference_file(dir, object_id));
  if (s.reference_hash != expected_hash)
    throw Error(ErrorCode::ReferenceMismatch, "reference for '" + object_id +
                                                  "' was built from a different config (hash " +
                                                  s.reference_hash.substr(0, 12) + " vs " +
                                                  expected_hash.substr(0, 12) + ")");
  if (s.set.object_id != object_id)
    throw Error(ErrorCode::ReferenceMismatch, "reference file holds object '" + s.set.object_id + "'");
  return std::move(s.set);
}

}  // namespace graspcov
