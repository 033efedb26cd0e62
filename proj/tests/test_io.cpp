#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "dmg/dataset_io.hpp"
#include "dmg/demo_synth.hpp"
#include "dmg/errors.hpp"

using namespace dmg;
namespace fs = std::filesystem;

namespace {

fs::path artifact_dir() {
  const fs::path dir = fs::path("io_test_artifacts");
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
}

SourceDataset stack_source() {
  static const SourceDataset src =
      synthesize_source(TaskSpec::builtin("stack"), "D0", 42, 2);
  return src;
}

GeneratedDataset small_generated() {
  GenerateOptions options;
  options.n_success_target = 4;
  options.seed0 = 5;
  options.threads = 1;
  static const GeneratedDataset ds = generate_dataset(stack_source(), options);
  return ds;
}

}  // namespace

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("source datasets round-trip exactly") {
  const SourceDataset src = stack_source();
  const fs::path path = artifact_dir() / "source.dmg";
  write_source(src, path.string());
  const SourceDataset back = read_source(path.string());

  CHECK(task_spec_to_json(back.spec) == task_spec_to_json(src.spec));
  CHECK(back.variant == src.variant);
  CHECK(back.seed == src.seed);
  REQUIRE(back.demos.size() == src.demos.size());
  for (std::size_t d = 0; d < src.demos.size(); ++d) {
    const Demonstration& demo_a = src.demos[d].demo;
    const Demonstration& demo_b = back.demos[d].demo;
    CHECK(demo_b.task == demo_a.task);
    CHECK(demo_b.dt == demo_a.dt);
    REQUIRE(demo_b.steps.size() == demo_a.steps.size());
    for (std::size_t k = 0; k < demo_a.steps.size(); ++k) {
      CHECK(demo_b.steps[k].t == demo_a.steps[k].t);
      CHECK(demo_b.steps[k].gripper == demo_a.steps[k].gripper);
      CHECK(demo_b.steps[k].ee_pose.to_array() ==
            demo_a.steps[k].ee_pose.to_array());
      for (const auto& [name, pose] : demo_a.steps[k].object_poses) {
        CHECK(demo_b.steps[k].object_poses.at(name).to_array() ==
              pose.to_array());
      }
    }
    const auto& segs_a = src.demos[d].segments;
    const auto& segs_b = back.demos[d].segments;
    REQUIRE(segs_b.size() == segs_a.size());
    for (std::size_t i = 0; i < segs_a.size(); ++i) {
      CHECK(segs_b[i].subtask_index == segs_a[i].subtask_index);
      CHECK(segs_b[i].reference_object == segs_a[i].reference_object);
      CHECK(segs_b[i].start == segs_a[i].start);
      CHECK(segs_b[i].end == segs_a[i].end);
      CHECK(segs_b[i].gripper_track == segs_a[i].gripper_track);
    }
  }

  // Rewriting the read-back dataset reproduces the file byte for byte.
  const fs::path path2 = artifact_dir() / "source_rewrite.dmg";
  write_source(back, path2.string());
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("generated datasets round-trip exactly and rewrite byte-identically") {
  const GeneratedDataset ds = small_generated();
  const fs::path path = artifact_dir() / "generated.dmg";
  write_generated(ds, path.string());
  const GeneratedDataset back = read_generated(path.string());
  CHECK(datasets_equal(ds, back));

  const fs::path path2 = artifact_dir() / "generated_rewrite.dmg";
  write_generated(back, path2.string());
  CHECK(slurp(path) == slurp(path2));
  CHECK(slurp(sidecar_path(path.string())) ==
        slurp(sidecar_path(path2.string())));
}

TEST_CASE("the sidecar index describes the container accurately") {
  const GeneratedDataset ds = small_generated();
  const fs::path path = artifact_dir() / "indexed.dmg";
  write_generated(ds, path.string());
  CHECK(sidecar_path("x/y.dmg") == "x/y.dmg.index.json");

  const std::string file_bytes = slurp(path);
  const auto side = nlohmann::ordered_json::parse(
      slurp(fs::path(sidecar_path(path.string()))));
  CHECK(side.at("schema_version").get<std::uint32_t>() == kSchemaVersion);
  CHECK(side.at("task").get<std::string>() == "stack");
  CHECK(side.at("variant").get<std::string>() == "D0");
  CHECK(side.at("attempts").get<std::uint64_t>() == ds.attempts);
  CHECK(side.at("successes").get<std::size_t>() == ds.records.size());
  CHECK(side.at("target_reached").get<bool>() == ds.target_reached);
  CHECK(side.at("dgr").get<std::string>().back() == '%');
  CHECK(side.at("fits").size() == ds.fits.size());

  const auto& recs = side.at("records");
  REQUIRE(recs.size() == ds.records.size());
  std::uint64_t prev_offset = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto offset = recs[i].at("offset").get<std::uint64_t>();
    const auto length = recs[i].at("length").get<std::uint64_t>();
    CHECK(recs[i].at("seed").get<std::uint64_t>() == ds.records[i].seed);
    CHECK(recs[i].at("n_steps").get<std::size_t>() == ds.records[i].log.size());
    CHECK(offset > prev_offset);
    prev_offset = offset;
    // Offset points at a block header whose length matches: 8-byte length
    // prefix + payload + 4-byte checksum must fit in the file.
    REQUIRE(offset + 8 + length + 4 <= file_bytes.size());
    std::uint64_t stored_len = 0;
    for (int b = 0; b < 8; ++b) {
      stored_len |= std::uint64_t(static_cast<unsigned char>(
                        file_bytes[offset + b]))
                    << (8 * b);
    }
    CHECK(stored_len == length);
  }
}

TEST_CASE("a flipped payload byte is caught by the block checksum") {
  const GeneratedDataset ds = small_generated();
  const fs::path path = artifact_dir() / "corrupt.dmg";
  write_generated(ds, path.string());

  const auto side = nlohmann::ordered_json::parse(
      slurp(fs::path(sidecar_path(path.string()))));
  const auto offset = side.at("records")[0].at("offset").get<std::uint64_t>();

  std::string bytes = slurp(path);
  bytes[offset + 8 + 3] ^= 0x40;  // Inside the first record's payload.
  spit(path, bytes);
  CHECK_THROWS_AS(read_generated(path.string()), ChecksumMismatchError);
}

TEST_CASE("bad magic, truncation, and kind confusion are I/O errors") {
  const GeneratedDataset ds = small_generated();
  const fs::path good = artifact_dir() / "good.dmg";
  write_generated(ds, good.string());
  const std::string bytes = slurp(good);

  const fs::path bad = artifact_dir() / "bad.dmg";
  std::string magicless = bytes;
  magicless[0] = 'X';
  spit(bad, magicless);
  CHECK_THROWS_AS(read_generated(bad.string()), IoError);

  spit(bad, bytes.substr(0, bytes.size() - 6));
  CHECK_THROWS_AS(read_generated(bad.string()), IoError);

  spit(bad, bytes.substr(0, 24));  // Preamble only, no blocks.
  CHECK_THROWS_AS(read_generated(bad.string()), IoError);

  CHECK_THROWS_AS(read_generated((artifact_dir() / "nonexistent.dmg").string()),
                  IoError);

  // A generated container is not a source container and vice versa.
  CHECK_THROWS_AS(read_source(good.string()), IoError);
  const fs::path src_path = artifact_dir() / "src_kind.dmg";
  write_source(stack_source(), src_path.string());
  CHECK_THROWS_AS(read_generated(src_path.string()), IoError);
}

TEST_CASE("unsupported schema versions are rejected by name") {
  const fs::path path = artifact_dir() / "future.dmg";
  write_generated(small_generated(), path.string());
  std::string bytes = slurp(path);
  // Preamble layout: 8-byte magic, u32 kind, u32 schema version.
  bytes[12] = 0x63;
  spit(path, bytes);
  CHECK_THROWS_AS(read_generated(path.string()), SchemaVersionMismatchError);
}

TEST_CASE("datasets_equal discriminates on real differences") {
  const GeneratedDataset ds = small_generated();
  CHECK(datasets_equal(ds, ds));

  GeneratedDataset other = ds;
  other.attempts += 1;
  CHECK(!datasets_equal(ds, other));

  other = ds;
  other.records[0].log[3].phase += 1e-15;
  CHECK(!datasets_equal(ds, other));

  other = ds;
  other.fits[0][0].params.weights(2, 1) += 1e-12;
  CHECK(!datasets_equal(ds, other));
}
