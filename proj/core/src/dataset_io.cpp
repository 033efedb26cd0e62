#include "dmg/dataset_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dmg/errors.hpp"
#include "dmg/report.hpp"

namespace dmg {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'D', 'M', 'G', 'F', 'I', 'L', 'E', '1'};
constexpr std::uint32_t kKindSource = 1;
constexpr std::uint32_t kKindGenerated = 2;
constexpr std::uint32_t kNoObject = 0xFFFFFFFFu;

// ---- little-endian encoding -------------------------------------------

void put_u8(std::string& b, std::uint8_t v) {
  b.push_back(static_cast<char>(v));
}

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

void put_i64(std::string& b, std::int64_t v) {
  put_u64(b, static_cast<std::uint64_t>(v));
}

void put_f64(std::string& b, double v) {
  put_u64(b, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::string& b, const std::string& s) {
  put_u32(b, static_cast<std::uint32_t>(s.size()));
  b.append(s);
}

void put_pose(std::string& b, const Pose& p) {
  for (double v : p.to_array()) put_f64(b, v);
}

class Cursor {
 public:
  Cursor(const unsigned char* begin, std::size_t size)
      : p_(begin), end_(begin + size) {}

  std::uint8_t u8() {
    need(1);
    return *p_++;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p_[i]) << (8 * i);
    p_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p_[i]) << (8 * i);
    p_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  Pose pose() {
    std::array<double, 7> a{};
    for (double& v : a) v = f64();
    return Pose::from_array(a);
  }
  bool at_end() const { return p_ == end_; }

 private:
  void need(std::size_t n) {
    if (static_cast<std::size_t>(end_ - p_) < n) {
      throw IoError("truncated dataset block");
    }
  }
  const unsigned char* p_;
  const unsigned char* end_;
};

std::uint32_t crc32_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size())));
}

void put_block(std::string& file, const std::string& payload) {
  put_u64(file, payload.size());
  file.append(payload);
  put_u32(file, crc32_of(payload));
}

// ---- JSON forms of DMP params / fits -----------------------------------

ordered_json json_vector(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const ordered_json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

ordered_json params_to_json(const DmpParams& p) {
  ordered_json j;
  j["alpha_y"] = p.config.alpha_y;
  j["beta_y"] = p.config.beta_y;
  j["alpha_x"] = p.config.alpha_x;
  j["n_bases"] = p.config.n_bases;
  j["dt"] = p.config.dt;
  j["tau"] = p.config.tau;
  j["centers"] = json_vector(p.layout.centers);
  j["widths"] = json_vector(p.layout.widths);
  ordered_json w = ordered_json::array();
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int d = 0; d < 6; ++d) row.push_back(p.weights(r, d));
    w.push_back(row);
  }
  j["weights"] = w;
  ordered_json y0 = ordered_json::array(), g = ordered_json::array();
  for (int d = 0; d < 6; ++d) {
    y0.push_back(p.y0[d]);
    g.push_back(p.g_demo[d]);
  }
  j["y0"] = y0;
  j["g_demo"] = g;
  j["duration"] = p.duration;
  j["n_steps"] = p.n_steps;
  j["chart_base"] = ordered_json{p.chart_base.w(), p.chart_base.x(),
                                 p.chart_base.y(), p.chart_base.z()};
  return j;
}

DmpParams params_from_json(const ordered_json& j) {
  DmpParams p;
  p.config.alpha_y = j.at("alpha_y").get<double>();
  p.config.beta_y = j.at("beta_y").get<double>();
  p.config.alpha_x = j.at("alpha_x").get<double>();
  p.config.n_bases = j.at("n_bases").get<int>();
  p.config.dt = j.at("dt").get<double>();
  p.config.tau = j.at("tau").get<double>();
  p.layout.centers = vector_from_json(j.at("centers"));
  p.layout.widths = vector_from_json(j.at("widths"));
  const auto& w = j.at("weights");
  p.weights.resize(static_cast<Eigen::Index>(w.size()), 6);
  for (std::size_t r = 0; r < w.size(); ++r) {
    for (int d = 0; d < 6; ++d) {
      p.weights(static_cast<Eigen::Index>(r), d) = w[r][d].get<double>();
    }
  }
  for (int d = 0; d < 6; ++d) {
    p.y0[d] = j.at("y0")[d].get<double>();
    p.g_demo[d] = j.at("g_demo")[d].get<double>();
  }
  p.duration = j.at("duration").get<double>();
  p.n_steps = j.at("n_steps").get<int>();
  const auto& q = j.at("chart_base");
  p.chart_base =
      Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                         q[2].get<double>(), q[3].get<double>());
  return p;
}

ordered_json pose_json(const Pose& p) {
  ordered_json a = ordered_json::array();
  for (double v : p.to_array()) a.push_back(v);
  return a;
}

Pose pose_from_json(const ordered_json& a) {
  std::array<double, 7> arr{};
  for (int i = 0; i < 7; ++i) arr[i] = a[i].get<double>();
  return Pose::from_array(arr);
}

ordered_json fit_to_json(const SegmentFit& f) {
  ordered_json j;
  j["subtask_index"] = f.subtask_index;
  j["reference_object"] = f.reference_object;
  j["relative_goal"] = pose_json(f.relative_goal);
  ordered_json track = ordered_json::array();
  for (Gripper g : f.gripper_track) {
    track.push_back(static_cast<int>(g));
  }
  j["gripper_track"] = track;
  j["params"] = params_to_json(f.params);
  return j;
}

SegmentFit fit_from_json(const ordered_json& j) {
  SegmentFit f;
  f.subtask_index = j.at("subtask_index").get<int>();
  f.reference_object = j.at("reference_object").get<std::string>();
  f.relative_goal = pose_from_json(j.at("relative_goal"));
  for (const auto& g : j.at("gripper_track")) {
    f.gripper_track.push_back(static_cast<Gripper>(g.get<int>()));
  }
  f.params = params_from_json(j.at("params"));
  return f;
}

// ---- record / demo payloads --------------------------------------------

void put_scene_state(std::string& b, const SceneState& s,
                     const std::vector<std::string>& order) {
  put_pose(b, s.ee_pose);
  put_u8(b, static_cast<std::uint8_t>(s.gripper));
  for (const auto& name : order) put_pose(b, s.object_poses.at(name));
  std::uint32_t attached = kNoObject;
  if (s.attached) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] == *s.attached) attached = static_cast<std::uint32_t>(i);
    }
    if (attached == kNoObject) {
      throw IoError("scene state attached to an object missing from the "
                    "task's object order");
    }
  }
  put_u32(b, attached);
  put_pose(b, s.attach_rel);
  put_u32(b, static_cast<std::uint32_t>(s.step));
}

SceneState get_scene_state(Cursor& c, const std::vector<std::string>& order) {
  SceneState s;
  s.ee_pose = c.pose();
  s.gripper = static_cast<Gripper>(c.u8());
  for (const auto& name : order) s.object_poses[name] = c.pose();
  const std::uint32_t attached = c.u32();
  s.attach_rel = c.pose();
  if (attached != kNoObject) {
    if (attached >= order.size()) throw IoError("bad attached object index");
    s.attached = order[attached];
  }
  s.step = static_cast<int>(c.u32());
  return s;
}

std::string record_payload(const GenerationRecord& r,
                           const std::vector<std::string>& order) {
  std::string b;
  put_u64(b, r.seed);
  put_str(b, r.variant);
  put_u32(b, static_cast<std::uint32_t>(r.selected_demo));
  put_u8(b, static_cast<std::uint8_t>(r.outcome));
  put_str(b, r.failure_reason);
  put_u32(b, static_cast<std::uint32_t>(r.subtask_completion_steps.size()));
  for (std::int64_t s : r.subtask_completion_steps) put_i64(b, s);
  put_u32(b, static_cast<std::uint32_t>(r.perturbations.size()));
  for (const auto& ev : r.perturbations) {
    put_u32(b, static_cast<std::uint32_t>(ev.step));
    put_str(b, ev.target_object);
    put_f64(b, ev.delta.x());
    put_f64(b, ev.delta.y());
    put_f64(b, ev.delta.z());
    put_f64(b, ev.yaw_delta);
    put_u8(b, ev.suppressed ? 1 : 0);
  }
  put_u32(b, static_cast<std::uint32_t>(r.log.size()));
  for (const auto& step : r.log) {
    put_scene_state(b, step.state, order);
    put_pose(b, step.command_pose);
    put_u8(b, static_cast<std::uint8_t>(step.command_gripper));
    put_pose(b, step.goal_pose);
    put_f64(b, step.phase);
    put_u32(b, static_cast<std::uint32_t>(step.segment_index));
  }
  return b;
}

GenerationRecord record_from_payload(const std::string& payload,
                                     const std::vector<std::string>& order) {
  Cursor c(reinterpret_cast<const unsigned char*>(payload.data()),
           payload.size());
  GenerationRecord r;
  r.seed = c.u64();
  r.variant = c.str();
  r.selected_demo = static_cast<int>(c.u32());
  r.outcome = static_cast<Outcome>(c.u8());
  r.failure_reason = c.str();
  const std::uint32_t n_subtasks = c.u32();
  for (std::uint32_t i = 0; i < n_subtasks; ++i) {
    r.subtask_completion_steps.push_back(c.i64());
  }
  const std::uint32_t n_events = c.u32();
  for (std::uint32_t i = 0; i < n_events; ++i) {
    PerturbationEvent ev;
    ev.step = static_cast<int>(c.u32());
    ev.target_object = c.str();
    ev.delta.x() = c.f64();
    ev.delta.y() = c.f64();
    ev.delta.z() = c.f64();
    ev.yaw_delta = c.f64();
    ev.suppressed = c.u8() != 0;
    r.perturbations.push_back(ev);
  }
  const std::uint32_t n_steps = c.u32();
  for (std::uint32_t i = 0; i < n_steps; ++i) {
    StepLog s;
    s.state = get_scene_state(c, order);
    s.command_pose = c.pose();
    s.command_gripper = static_cast<Gripper>(c.u8());
    s.goal_pose = c.pose();
    s.phase = c.f64();
    s.segment_index = static_cast<int>(c.u32());
    r.log.push_back(std::move(s));
  }
  if (!c.at_end()) throw IoError("record block has trailing bytes");
  return r;
}

std::string demo_payload(const AnnotatedDemo& d,
                         const std::vector<std::string>& order) {
  std::string b;
  put_f64(b, d.demo.dt);
  put_str(b, d.demo.task);
  put_u32(b, static_cast<std::uint32_t>(d.demo.steps.size()));
  for (const auto& s : d.demo.steps) {
    put_f64(b, s.t);
    put_pose(b, s.ee_pose);
    put_u8(b, static_cast<std::uint8_t>(s.gripper));
    for (const auto& name : order) put_pose(b, s.object_poses.at(name));
  }
  put_u32(b, static_cast<std::uint32_t>(d.segments.size()));
  for (const auto& seg : d.segments) {
    put_u32(b, static_cast<std::uint32_t>(seg.subtask_index));
    put_str(b, seg.reference_object);
    put_u64(b, seg.start);
    put_u64(b, seg.end);
  }
  return b;
}

AnnotatedDemo demo_from_payload(const std::string& payload,
                                const std::vector<std::string>& order) {
  Cursor c(reinterpret_cast<const unsigned char*>(payload.data()),
           payload.size());
  AnnotatedDemo d;
  d.demo.dt = c.f64();
  d.demo.task = c.str();
  const std::uint32_t n_steps = c.u32();
  for (std::uint32_t i = 0; i < n_steps; ++i) {
    DemoStep s;
    s.t = c.f64();
    s.ee_pose = c.pose();
    s.gripper = static_cast<Gripper>(c.u8());
    for (const auto& name : order) s.object_poses[name] = c.pose();
    d.demo.steps.push_back(std::move(s));
  }
  const std::uint32_t n_segments = c.u32();
  for (std::uint32_t i = 0; i < n_segments; ++i) {
    SubtaskSegment seg;
    seg.subtask_index = static_cast<int>(c.u32());
    seg.reference_object = c.str();
    seg.start = c.u64();
    seg.end = c.u64();
    if (seg.end > d.demo.steps.size() || seg.start >= seg.end) {
      throw IoError("demo segment range out of bounds");
    }
    for (std::size_t k = seg.start; k < seg.end; ++k) {
      seg.gripper_track.push_back(d.demo.steps[k].gripper);
    }
    d.segments.push_back(std::move(seg));
  }
  if (!c.at_end()) throw IoError("demo block has trailing bytes");
  return d;
}

// ---- file-level helpers --------------------------------------------------

struct FilePreamble {
  std::uint32_t kind = 0;
  std::uint32_t version = 0;
  std::uint64_t spec_hash = 0;
};

void put_preamble(std::string& file, std::uint32_t kind,
                  std::uint64_t spec_hash) {
  file.append(kMagic, sizeof(kMagic));
  put_u32(file, kind);
  put_u32(file, kSchemaVersion);
  put_u64(file, spec_hash);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\" for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw IoError("failed reading \"" + path + "\"");
  }
  return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out.good()) throw IoError("failed writing \"" + path + "\"");
}

/// Splits a container file into its preamble and CRC-checked block payloads.
struct ParsedFile {
  FilePreamble preamble;
  std::vector<std::string> blocks;
  std::vector<std::uint64_t> block_offsets;  ///< Offset of each block header.
};

ParsedFile parse_file(const std::string& bytes, const std::string& path) {
  if (bytes.size() < sizeof(kMagic) + 16 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("\"" + path + "\" is not a dmg dataset file");
  }
  Cursor c(reinterpret_cast<const unsigned char*>(bytes.data()) +
               sizeof(kMagic),
           bytes.size() - sizeof(kMagic));
  ParsedFile f;
  f.preamble.kind = c.u32();
  f.preamble.version = c.u32();
  if (f.preamble.version != kSchemaVersion) {
    throw SchemaVersionMismatchError(
        "\"" + path + "\" uses schema version " +
        std::to_string(f.preamble.version) + "; this build understands " +
        std::to_string(kSchemaVersion));
  }
  f.preamble.spec_hash = c.u64();
  std::size_t offset = sizeof(kMagic) + 16;
  while (offset < bytes.size()) {
    Cursor bc(reinterpret_cast<const unsigned char*>(bytes.data()) + offset,
              bytes.size() - offset);
    const std::uint64_t len = bc.u64();
    const std::uint64_t remaining = bytes.size() - offset - 8;
    if (len > remaining || remaining - len < 4) {
      throw IoError("truncated block in \"" + path + "\"");
    }
    std::string payload = bytes.substr(offset + 8, len);
    Cursor cc(reinterpret_cast<const unsigned char*>(bytes.data()) + offset +
                  8 + len,
              4);
    const std::uint32_t stored_crc = cc.u32();
    if (crc32_of(payload) != stored_crc) {
      throw ChecksumMismatchError("block at offset " +
                                  std::to_string(offset) + " of \"" + path +
                                  "\" fails its CRC-32 check");
    }
    f.block_offsets.push_back(offset);
    f.blocks.push_back(std::move(payload));
    offset += 8 + len + 4;
  }
  if (f.blocks.empty()) {
    throw IoError("\"" + path + "\" contains no blocks");
  }
  return f;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string sidecar_path(const std::string& dataset_path) {
  return dataset_path + ".index.json";
}

void write_source(const SourceDataset& src, const std::string& path) {
  src.spec.validate();
  const std::string spec_json = task_spec_to_json(src.spec);
  const std::vector<std::string> order = src.spec.object_order();

  ordered_json header;
  header["kind"] = "source";
  header["task"] = ordered_json::parse(spec_json);
  header["variant"] = src.variant;
  header["seed"] = src.seed;
  header["object_order"] = order;
  header["n_demos"] = src.demos.size();

  std::string file;
  put_preamble(file, kKindSource, fnv1a64(spec_json));
  put_block(file, header.dump(2));
  for (const auto& demo : src.demos) {
    put_block(file, demo_payload(demo, order));
  }
  write_file(path, file);
}

SourceDataset read_source(const std::string& path) {
  const ParsedFile f = parse_file(read_file(path), path);
  if (f.preamble.kind != kKindSource) {
    throw IoError("\"" + path + "\" is not a source dataset");
  }
  ordered_json header;
  try {
    header = ordered_json::parse(f.blocks[0]);
  } catch (const ordered_json::parse_error& e) {
    throw IoError("malformed header in \"" + path + "\": " + e.what());
  }
  SourceDataset src;
  try {
    src.spec = task_spec_from_json(header.at("task").dump());
    src.variant = header.at("variant").get<std::string>();
    src.seed = header.at("seed").get<std::uint64_t>();
    const std::size_t n = header.at("n_demos").get<std::size_t>();
    if (n + 1 != f.blocks.size()) {
      throw IoError("demo count does not match block count in \"" + path +
                    "\"");
    }
  } catch (const ordered_json::exception& e) {
    throw IoError("malformed header in \"" + path + "\": " + e.what());
  }
  if (fnv1a64(task_spec_to_json(src.spec)) != f.preamble.spec_hash) {
    throw IoError("task spec hash mismatch in \"" + path + "\"");
  }
  const std::vector<std::string> order = src.spec.object_order();
  for (std::size_t i = 1; i < f.blocks.size(); ++i) {
    src.demos.push_back(demo_from_payload(f.blocks[i], order));
  }
  return src;
}

void write_generated(const GeneratedDataset& ds, const std::string& path) {
  ds.spec.validate();
  const std::string spec_json = task_spec_to_json(ds.spec);
  const std::vector<std::string> order = ds.spec.object_order();

  ordered_json header;
  header["kind"] = "generated";
  header["task"] = ordered_json::parse(spec_json);
  header["variant"] = ds.variant;
  header["seed0"] = ds.seed0;
  header["attempts"] = ds.attempts;
  header["target_reached"] = ds.target_reached;
  header["object_order"] = order;
  header["n_records"] = ds.records.size();
  ordered_json summaries = ordered_json::array();
  for (const auto& a : ds.attempt_summaries) {
    ordered_json s;
    s["seed"] = a.seed;
    s["success"] = a.success;
    s["failure_reason"] = a.failure_reason;
    s["completion_steps"] = a.subtask_completion_steps;
    summaries.push_back(s);
  }
  header["attempt_summaries"] = summaries;
  ordered_json fits = ordered_json::array();
  for (const auto& demo_fits : ds.fits) {
    ordered_json per_demo = ordered_json::array();
    for (const auto& fit : demo_fits) per_demo.push_back(fit_to_json(fit));
    fits.push_back(per_demo);
  }
  header["fits"] = fits;

  std::string file;
  put_preamble(file, kKindGenerated, fnv1a64(spec_json));
  put_block(file, header.dump(2));
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint64_t> lengths;
  for (const auto& rec : ds.records) {
    offsets.push_back(file.size());
    const std::string payload = record_payload(rec, order);
    lengths.push_back(payload.size());
    put_block(file, payload);
  }
  write_file(path, file);

  // Sidecar index: offsets, outcomes, rendered DGR, and the fits.
  ordered_json side;
  side["schema_version"] = kSchemaVersion;
  char hash_hex[19];
  std::snprintf(hash_hex, sizeof(hash_hex), "0x%016llx",
                static_cast<unsigned long long>(fnv1a64(spec_json)));
  side["spec_hash"] = hash_hex;
  side["task"] = ds.spec.name;
  side["variant"] = ds.variant;
  side["seed0"] = ds.seed0;
  side["attempts"] = ds.attempts;
  side["successes"] = ds.records.size();
  side["dgr"] = format_dgr_percent(ds.records.size(), ds.attempts);
  side["target_reached"] = ds.target_reached;
  ordered_json recs = ordered_json::array();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    ordered_json r;
    r["seed"] = ds.records[i].seed;
    r["offset"] = offsets[i];
    r["length"] = lengths[i];
    r["n_steps"] = ds.records[i].log.size();
    r["selected_demo"] = ds.records[i].selected_demo;
    recs.push_back(r);
  }
  side["records"] = recs;
  side["fits"] = fits;
  write_file(sidecar_path(path), side.dump(2));
}

GeneratedDataset read_generated(const std::string& path) {
  const ParsedFile f = parse_file(read_file(path), path);
  if (f.preamble.kind != kKindGenerated) {
    throw IoError("\"" + path + "\" is not a generated dataset");
  }
  ordered_json header;
  try {
    header = ordered_json::parse(f.blocks[0]);
  } catch (const ordered_json::parse_error& e) {
    throw IoError("malformed header in \"" + path + "\": " + e.what());
  }
  GeneratedDataset ds;
  try {
    ds.spec = task_spec_from_json(header.at("task").dump());
    ds.variant = header.at("variant").get<std::string>();
    ds.seed0 = header.at("seed0").get<std::uint64_t>();
    ds.attempts = header.at("attempts").get<std::uint64_t>();
    ds.target_reached = header.at("target_reached").get<bool>();
    const std::size_t n = header.at("n_records").get<std::size_t>();
    if (n + 1 != f.blocks.size()) {
      throw IoError("record count does not match block count in \"" + path +
                    "\"");
    }
    for (const auto& s : header.at("attempt_summaries")) {
      AttemptSummary a;
      a.seed = s.at("seed").get<std::uint64_t>();
      a.success = s.at("success").get<bool>();
      a.failure_reason = s.at("failure_reason").get<std::string>();
      for (const auto& v : s.at("completion_steps")) {
        a.subtask_completion_steps.push_back(v.get<std::int64_t>());
      }
      ds.attempt_summaries.push_back(std::move(a));
    }
    for (const auto& per_demo : header.at("fits")) {
      std::vector<SegmentFit> demo_fits;
      for (const auto& fit : per_demo) demo_fits.push_back(fit_from_json(fit));
      ds.fits.push_back(std::move(demo_fits));
    }
  } catch (const ordered_json::exception& e) {
    throw IoError("malformed header in \"" + path + "\": " + e.what());
  }
  if (fnv1a64(task_spec_to_json(ds.spec)) != f.preamble.spec_hash) {
    throw IoError("task spec hash mismatch in \"" + path + "\"");
  }
  const std::vector<std::string> order = ds.spec.object_order();
  for (std::size_t i = 1; i < f.blocks.size(); ++i) {
    ds.records.push_back(record_from_payload(f.blocks[i], order));
  }
  return ds;
}

namespace {

bool poses_equal(const Pose& a, const Pose& b) {
  return a.to_array() == b.to_array();
}

bool states_equal(const SceneState& a, const SceneState& b) {
  if (!poses_equal(a.ee_pose, b.ee_pose) || a.gripper != b.gripper ||
      a.attached != b.attached || !poses_equal(a.attach_rel, b.attach_rel) ||
      a.step != b.step || a.object_poses.size() != b.object_poses.size()) {
    return false;
  }
  for (const auto& [name, pose] : a.object_poses) {
    const auto it = b.object_poses.find(name);
    if (it == b.object_poses.end() || !poses_equal(pose, it->second)) {
      return false;
    }
  }
  return true;
}

bool records_equal(const GenerationRecord& a, const GenerationRecord& b) {
  if (a.seed != b.seed || a.variant != b.variant ||
      a.selected_demo != b.selected_demo || a.outcome != b.outcome ||
      a.failure_reason != b.failure_reason ||
      a.subtask_completion_steps != b.subtask_completion_steps ||
      a.perturbations.size() != b.perturbations.size() ||
      a.log.size() != b.log.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.perturbations.size(); ++i) {
    const auto& x = a.perturbations[i];
    const auto& y = b.perturbations[i];
    if (x.step != y.step || x.target_object != y.target_object ||
        (x.delta.array() != y.delta.array()).any() ||
        x.yaw_delta != y.yaw_delta || x.suppressed != y.suppressed) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    const auto& x = a.log[i];
    const auto& y = b.log[i];
    if (!states_equal(x.state, y.state) ||
        !poses_equal(x.command_pose, y.command_pose) ||
        x.command_gripper != y.command_gripper ||
        !poses_equal(x.goal_pose, y.goal_pose) || x.phase != y.phase ||
        x.segment_index != y.segment_index) {
      return false;
    }
  }
  return true;
}

template <typename A, typename B>
bool matrices_equal(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

bool fits_equal(const SegmentFit& a, const SegmentFit& b) {
  return a.subtask_index == b.subtask_index &&
         a.reference_object == b.reference_object &&
         poses_equal(a.relative_goal, b.relative_goal) &&
         a.gripper_track == b.gripper_track &&
         matrices_equal(a.params.weights, b.params.weights) &&
         matrices_equal(a.params.layout.centers, b.params.layout.centers) &&
         matrices_equal(a.params.layout.widths, b.params.layout.widths) &&
         matrices_equal(a.params.y0, b.params.y0) &&
         matrices_equal(a.params.g_demo, b.params.g_demo) &&
         a.params.duration == b.params.duration &&
         a.params.n_steps == b.params.n_steps &&
         matrices_equal(a.params.chart_base.coeffs(),
                        b.params.chart_base.coeffs());
}

}  // namespace

bool datasets_equal(const GeneratedDataset& a, const GeneratedDataset& b) {
  if (task_spec_to_json(a.spec) != task_spec_to_json(b.spec) ||
      a.variant != b.variant || a.seed0 != b.seed0 ||
      a.attempts != b.attempts || a.target_reached != b.target_reached ||
      a.records.size() != b.records.size() ||
      a.attempt_summaries.size() != b.attempt_summaries.size() ||
      a.fits.size() != b.fits.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (!records_equal(a.records[i], b.records[i])) return false;
  }
  for (std::size_t i = 0; i < a.attempt_summaries.size(); ++i) {
    const auto& x = a.attempt_summaries[i];
    const auto& y = b.attempt_summaries[i];
    if (x.seed != y.seed || x.success != y.success ||
        x.failure_reason != y.failure_reason ||
        x.subtask_completion_steps != y.subtask_completion_steps) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    if (a.fits[i].size() != b.fits[i].size()) return false;
    for (std::size_t k = 0; k < a.fits[i].size(); ++k) {
      if (!fits_equal(a.fits[i][k], b.fits[i][k])) return false;
    }
  }
  return true;
}

}  // namespace dmg
