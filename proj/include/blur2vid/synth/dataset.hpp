#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blur2vid/core/image_io.hpp"
#include "blur2vid/synth/blur_synth.hpp"

namespace blur2vid::synth {

namespace fs = std::filesystem;
using nlohmann::json;

struct SampleMeta {
  std::string dir;
  int n = 0;
  EulerRotation<double> beta;
  std::uint64_t seed = 0;
  int crop_x = -1, crop_y = -1;
};

struct DatasetManifest {
  SynthMode mode = SynthMode::rotational;
  double frame_count_offset = 10.0;
  double rot_min_deg = -10.0, rot_max_deg = 10.0;
  int n_dynamic = 7;
  std::uint64_t seed = 1;
  std::vector<SampleMeta> samples;

  json to_json() const {
    json j;
    j["mode"] = to_string(mode);
    j["frame_count_offset"] = frame_count_offset;
    j["rotation_range"] = {rot_min_deg, rot_max_deg};
    j["n_dynamic"] = n_dynamic;
    j["seed"] = seed;
    j["samples"] = json::array();
    for (const auto& s : samples) {
      json e;
      e["dir"] = s.dir;
      e["n"] = s.n;
      e["beta"] = {s.beta.x_deg, s.beta.y_deg, s.beta.z_deg};
      e["seed"] = s.seed;
      e["crop"] = {s.crop_x, s.crop_y};
      j["samples"].push_back(e);
    }
    return j;
  }

  static DatasetManifest from_json(const json& j) {
    DatasetManifest m;
    m.mode = synth_mode_from_string(j.at("mode").get<std::string>());
    m.frame_count_offset = j.at("frame_count_offset").get<double>();
    m.rot_min_deg = j.at("rotation_range")[0].get<double>();
    m.rot_max_deg = j.at("rotation_range")[1].get<double>();
    m.n_dynamic = j.at("n_dynamic").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("samples")) {
      SampleMeta s;
      s.dir = e.at("dir").get<std::string>();
      s.n = e.at("n").get<int>();
      s.beta = {e.at("beta")[0].get<double>(), e.at("beta")[1].get<double>(),
                e.at("beta")[2].get<double>()};
      s.seed = e.at("seed").get<std::uint64_t>();
      s.crop_x = e.at("crop")[0].get<int>();
      s.crop_y = e.at("crop")[1].get<int>();
      m.samples.push_back(s);
    }
    return m;
  }
};

inline std::string sample_dir_name(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%06zu", index);
  return buf;
}

inline std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%02d.png", index);
  return buf;
}

// Streams samples to disk one at a time; finalize() writes the manifest.
// Layout: root/manifest.json, root/sample_%06d/{blur.png, frame_%02d.png,
// meta.json}, all PNGs 8-bit RGB.
class DatasetWriter {
 public:
  DatasetWriter(fs::path root, DatasetManifest header) : root_(std::move(root)), manifest_(std::move(header)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw validation_error("cannot create dataset root: " + root_.string());
    manifest_.samples.clear();
  }

  void add(const BlurSample& sample) {
    SampleMeta meta;
    meta.dir = sample_dir_name(manifest_.samples.size());
    meta.n = sample.n;
    meta.beta = sample.rotation;
    meta.seed = sample.seed;
    meta.crop_x = sample.crop_x;
    meta.crop_y = sample.crop_y;

    const fs::path dir = root_ / meta.dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw validation_error("cannot create sample dir: " + dir.string());

    write_png((dir / "blur.png").string(), sample.blurred);
    for (int i = 0; i < sample.n; ++i)
      write_png((dir / frame_file_name(i)).string(), sample.frames[static_cast<size_t>(i)]);

    json meta_j;
    meta_j["mode"] = to_string(sample.mode);
    meta_j["n"] = sample.n;
    meta_j["beta"] = {sample.rotation.x_deg, sample.rotation.y_deg, sample.rotation.z_deg};
    meta_j["seed"] = sample.seed;
    meta_j["crop"] = {sample.crop_x, sample.crop_y};
    std::ofstream os(dir / "meta.json");
    if (!os) throw validation_error("cannot write meta.json in " + dir.string());
    os << meta_j.dump(2) << "\n";

    manifest_.samples.push_back(std::move(meta));
  }

  size_t count() const { return manifest_.samples.size(); }

  void finalize() {
    std::ofstream os(root_ / "manifest.json");
    if (!os) throw validation_error("cannot write manifest.json in " + root_.string());
    os << manifest_.to_json().dump(2) << "\n";
  }

 private:
  fs::path root_;
  DatasetManifest manifest_;
};

// Abstract sample container so trainers and tests can feed either
// in-memory or on-disk data.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual size_t size() const = 0;
  virtual BlurSample load(size_t index) const = 0;
};

class MemoryDataset : public SampleSource {
 public:
  explicit MemoryDataset(std::vector<BlurSample> samples) : samples_(std::move(samples)) {}
  size_t size() const override { return samples_.size(); }
  BlurSample load(size_t index) const override { return samples_.at(index); }

 private:
  std::vector<BlurSample> samples_;
};

// Lazily loads samples from the on-disk layout written by DatasetWriter.
class DiskDataset : public SampleSource {
 public:
  explicit DiskDataset(fs::path root) : root_(std::move(root)) {
    const fs::path mpath = root_ / "manifest.json";
    if (!fs::exists(mpath))
      throw validation_error("empty dataset: no manifest.json under " + root_.string());
    std::ifstream is(mpath);
    json j;
    try {
      is >> j;
      manifest_ = DatasetManifest::from_json(j);
    } catch (const json::exception& e) {
      throw validation_error("bad manifest " + mpath.string() + ": " + e.what());
    }
    if (manifest_.samples.empty())
      throw validation_error("empty dataset: manifest lists no samples in " + root_.string());
  }

  size_t size() const override { return manifest_.samples.size(); }

  BlurSample load(size_t index) const override {
    const SampleMeta& meta = manifest_.samples.at(index);
    const fs::path dir = root_ / meta.dir;
    BlurSample s;
    s.mode = manifest_.mode;
    s.n = meta.n;
    s.rotation = meta.beta;
    s.seed = meta.seed;
    s.crop_x = meta.crop_x;
    s.crop_y = meta.crop_y;
    s.blurred = read_png((dir / "blur.png").string());
    s.frames.reserve(static_cast<size_t>(meta.n));
    for (int i = 0; i < meta.n; ++i)
      s.frames.push_back(read_png((dir / frame_file_name(i)).string()));
    return s;
  }

  const DatasetManifest& manifest() const { return manifest_; }

 private:
  fs::path root_;
  DatasetManifest manifest_;
};

inline void write_dataset(const std::vector<BlurSample>& samples, const fs::path& root,
                          DatasetManifest header) {
  DatasetWriter writer(root, std::move(header));
  for (const auto& s : samples) writer.add(s);
  writer.finalize();
}

inline DiskDataset read_dataset(const fs::path& root) { return DiskDataset(root); }

}  // namespace blur2vid::synth
