#ifndef STGAN_INGEST_HPP
#define STGAN_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stgan/core_types.hpp"
#include "stgan/image_io.hpp"

namespace stgan::ingest {

namespace fs = std::filesystem;

/// Maps raw integers [0, 2^bits − 1] linearly onto [-1, 1].
inline float normalize(std::uint16_t raw, int bit_depth) {
  const double max = static_cast<double>((1u << bit_depth) - 1u);
  return static_cast<float>(2.0 * raw / max - 1.0);
}

inline std::uint16_t denormalize(float value, int bit_depth) {
  const double max = static_cast<double>((1u << bit_depth) - 1u);
  const double raw = std::round((std::clamp(static_cast<double>(value), -1.0, 1.0) + 1.0) * 0.5 * max);
  return static_cast<std::uint16_t>(raw);
}

struct RawFrameFile {
  fs::path path;
  int bit_depth = 8;
  int index = 0;
};

/// Frame index from the trailing digit run of the stem, e.g. frame_0042.png
/// or frame_0042_pred.tif. Returns -1 when the name carries no index.
inline int parse_frame_index(const fs::path& p) {
  static const std::regex pattern(R"(^(.*?)(\d+)(_[A-Za-z]+)?$)");
  std::smatch m;
  const std::string stem = p.stem().string();
  if (!std::regex_match(stem, m, pattern)) return -1;
  return std::stoi(m[2].str());
}

inline std::vector<RawFrameFile> list_frames(const fs::path& dir) {
  require(fs::is_directory(dir), Errc::DiskError, "not a directory: " + dir.string());
  std::vector<RawFrameFile> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = io::lower_extension(entry.path());
    if (ext != ".png" && ext != ".tif" && ext != ".tiff") continue;
    const int index = parse_frame_index(entry.path());
    if (index < 0) continue;
    files.push_back({entry.path(), 0, index});
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return files;
}

/// Reads every indexed grayscale frame in `dir`, sorted by index, normalized
/// to [-1, 1]. Frame t values are positions 0..T−1.
inline VideoSequence load_sequence(const fs::path& dir, Domain domain) {
  auto files = list_frames(dir);
  require(!files.empty(), Errc::EmptyDirectory, "no indexed PNG/TIFF frames in " + dir.string());
  for (std::size_t i = 1; i < files.size(); ++i)
    require(files[i].index == files[i - 1].index + 1, Errc::NonContiguousIndices,
            "frame " + std::to_string(files[i - 1].index + 1) + " missing in " + dir.string());

  VideoSequence seq;
  seq.domain = domain;
  seq.source_id = fs::absolute(dir).lexically_normal().filename().string();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto img = io::read_image(files[i].path);
    files[i].bit_depth = img.bit_depth;
    if (i == 0) {
      seq.bit_depth = img.bit_depth;
    } else {
      require(img.width == seq.width() && img.height == seq.height(), Errc::MixedDimensions,
              files[i].path.string() + " differs in size from the first frame");
      require(img.bit_depth == seq.bit_depth, Errc::UnsupportedBitDepth,
              files[i].path.string() + " differs in bit depth from the first frame");
    }
    Frame f{std::vector<float>(img.pixels.size()), img.height, img.width, static_cast<int>(i), domain};
    for (std::size_t p = 0; p < img.pixels.size(); ++p) f.pixels[p] = normalize(img.pixels[p], img.bit_depth);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

inline std::string frame_filename(int index, const std::string& extension = ".png", const std::string& suffix = "") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d", index);
  return std::string(buf) + suffix + extension;
}

/// Writes frame_%04d<suffix><ext> files at the given bit depth.
inline std::vector<fs::path> save_sequence(const VideoSequence& seq, const fs::path& dir, int bit_depth,
                                           const std::string& extension = ".png", const std::string& suffix = "") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::DiskError, "cannot create " + dir.string());
  std::vector<fs::path> written;
  for (int i = 0; i < seq.length(); ++i) {
    const Frame& f = seq[i];
    io::GrayImage img{f.width, f.height, bit_depth, std::vector<std::uint16_t>(f.pixels.size())};
    for (std::size_t p = 0; p < f.pixels.size(); ++p) img.pixels[p] = denormalize(f.pixels[p], bit_depth);
    written.push_back(dir / frame_filename(f.t, extension, suffix));
    io::write_image(written.back(), img);
  }
  return written;
}

/// Removes a constant time shift s between channels. s > 0 means V lags U:
/// u_i is paired with v_{i+s}. Both outputs are reindexed from 0.
inline std::pair<VideoSequence, VideoSequence> align_time_shift(const VideoSequence& u_seq, const VideoSequence& v_seq,
                                                                int s) {
  const int shortest = std::min(u_seq.length(), v_seq.length());
  require(std::abs(s) < shortest, Errc::ShiftTooLarge,
          "|shift| " + std::to_string(std::abs(s)) + " must be < " + std::to_string(shortest));
  const int n = shortest - std::abs(s);
  const int u0 = s < 0 ? -s : 0;
  const int v0 = s > 0 ? s : 0;
  auto slice = [n](const VideoSequence& src, int start) {
    VideoSequence out;
    out.domain = src.domain;
    out.source_id = src.source_id;
    out.bit_depth = src.bit_depth;
    for (int i = 0; i < n; ++i) {
      out.frames.push_back(src[start + i]);
      out.frames.back().t = i;
    }
    return out;
  };
  return {slice(u_seq, u0), slice(v_seq, v0)};
}

enum class Split { Train, Val };
constexpr std::string_view to_string(Split s) { return s == Split::Train ? "train" : "val"; }

struct CropOrigin {
  int x = 0;
  int y = 0;
  bool operator==(const CropOrigin&) const = default;
};

/// A window is the τ time points ending at `t`, cropped at `origins[origin]`.
struct WindowRef {
  int origin = 0;
  int t = 0;
  bool operator==(const WindowRef&) const = default;
};

struct PatchDataset {
  Split split = Split::Train;
  int crop = 128;
  int tau = 3;
  std::uint64_t seed = 0;
  std::vector<CropOrigin> origins;
  std::vector<WindowRef> windows;
  std::shared_ptr<const VideoSequence> u;
  std::shared_ptr<const VideoSequence> v;

  std::size_t size() const { return windows.size(); }

  /// The same crop of both channels over time points t−τ+1..t.
  PairedWindow window(std::size_t i) const {
    const WindowRef& w = windows.at(i);
    const CropOrigin& o = origins.at(static_cast<std::size_t>(w.origin));
    PairedWindow pw;
    for (int k = w.t - tau + 1; k <= w.t; ++k) {
      pw.u.push_back((*u)[k].crop(o.x, o.y, crop, crop));
      pw.v.push_back((*v)[k].crop(o.x, o.y, crop, crop));
    }
    return pw;
  }

  /// The crop at `origin` across the whole movie, for sequence-level evaluation.
  std::pair<VideoSequence, VideoSequence> crop_sequences(int origin) const {
    const CropOrigin& o = origins.at(static_cast<std::size_t>(origin));
    std::pair<VideoSequence, VideoSequence> out;
    for (auto [src, dst] : {std::pair{u.get(), &out.first}, std::pair{v.get(), &out.second}}) {
      dst->domain = src->domain;
      dst->source_id = src->source_id;
      dst->bit_depth = src->bit_depth;
      for (const auto& f : src->frames) dst->frames.push_back(f.crop(o.x, o.y, crop, crop));
    }
    return out;
  }
};

struct PatchOptions {
  int crop = 128;
  int n_train = 4000;
  int n_val = 1000;
  int tau = 3;
  std::uint64_t seed = 0;
  bool grid = false;
  /// Earliest time index a window may include (e.g. skip padded pre-lag frames).
  int first_frame = 0;
};

namespace detail {

struct Band {
  int begin = 0;  // along x
  int end = 0;
};

inline std::vector<CropOrigin> place_origins(int count, const Band& band, int height, int crop, bool grid,
                                             std::mt19937_64& rng) {
  std::vector<CropOrigin> out;
  if (grid) {
    std::vector<CropOrigin> cells;
    for (int y = 0; y + crop <= height; y += crop)
      for (int x = band.begin; x + crop <= band.end; x += crop) cells.push_back({x, y});
    for (int i = 0; i < count; ++i) out.push_back(cells[static_cast<std::size_t>(i) % cells.size()]);
    return out;
  }
  std::uniform_int_distribution<int> dx(band.begin, band.end - crop);
  std::uniform_int_distribution<int> dy(0, height - crop);
  for (int i = 0; i < count; ++i) {
    const int x = dx(rng);
    const int y = dy(rng);
    out.push_back({x, y});
  }
  return out;
}

inline void fill_windows(PatchDataset& ds, int n, int first_t, int last_t) {
  const int per_origin = last_t - first_t + 1;
  for (int i = 0; i < n; ++i) ds.windows.push_back({i / per_origin, first_t + i % per_origin});
}

}  // namespace detail

/// Samples paired crop origins and enumerates every causal window at each.
/// Validation crops come from a vertical band at the right edge and training
/// crops from the rest, so the two splits never share a pixel.
inline std::pair<PatchDataset, PatchDataset> extract_patches(const VideoSequence& u_seq, const VideoSequence& v_seq,
                                                             const PatchOptions& opt) {
  require(opt.tau >= 2, Errc::TauTooSmall, "tau must be >= 2");
  require(u_seq.length() == v_seq.length() && u_seq.height() == v_seq.height() && u_seq.width() == v_seq.width(),
          Errc::ShapeError, "paired sequences must be aligned and equally sized");
  const int h = u_seq.height(), w = u_seq.width();
  require(opt.crop <= h && opt.crop <= w, Errc::CropTooLarge,
          "crop " + std::to_string(opt.crop) + " exceeds frame " + std::to_string(w) + "x" + std::to_string(h));
  require(opt.crop >= kMinFrameExtent, Errc::InvalidConfig, "crop must be >= 16");
  const int first_t = std::max(opt.first_frame, 0) + opt.tau - 1;
  const int last_t = u_seq.length() - 1;
  require(last_t >= first_t, Errc::SequenceTooShort, "sequence too short for tau " + std::to_string(opt.tau));
  const int per_origin = last_t - first_t + 1;

  detail::Band train_band{0, w}, val_band{w, w};
  if (opt.n_val > 0) {
    const double share = static_cast<double>(opt.n_val) / (opt.n_train + opt.n_val);
    const int val_width = std::max(opt.crop, static_cast<int>(std::lround(w * share)));
    val_band = {w - val_width, w};
    train_band = {0, w - val_width};
    require(train_band.end - train_band.begin >= opt.crop || opt.n_train == 0, Errc::InsufficientArea,
            "frame width " + std::to_string(w) + " cannot hold disjoint train and val crops of " +
                std::to_string(opt.crop));
  }

  auto shared_u = std::make_shared<const VideoSequence>(u_seq);
  auto shared_v = std::make_shared<const VideoSequence>(v_seq);
  std::mt19937_64 rng(opt.seed);
  auto build = [&](Split split, int n, const detail::Band& band) {
    PatchDataset ds;
    ds.split = split;
    ds.crop = opt.crop;
    ds.tau = opt.tau;
    ds.seed = opt.seed;
    ds.u = shared_u;
    ds.v = shared_v;
    const int n_origins = (n + per_origin - 1) / per_origin;
    ds.origins = detail::place_origins(n_origins, band, h, opt.crop, opt.grid, rng);
    detail::fill_windows(ds, n, first_t, last_t);
    return ds;
  };
  PatchDataset val = build(Split::Val, opt.n_val, val_band);
  PatchDataset train = build(Split::Train, opt.n_train, train_band);
  return {std::move(train), std::move(val)};
}

/// JSON manifest sufficient to rebuild both splits from the source movies.
inline nlohmann::json dataset_manifest(const PatchDataset& train, const PatchDataset& val, const PatchOptions& opt) {
  using nlohmann::json;
  auto split_json = [](const PatchDataset& ds) {
    json origins = json::array(), windows = json::array();
    for (const auto& o : ds.origins) origins.push_back({o.x, o.y});
    for (const auto& w : ds.windows) windows.push_back({w.origin, w.t});
    return json{{"split", to_string(ds.split)}, {"origins", origins}, {"windows", windows}};
  };
  return json{{"seed", opt.seed},
              {"crop", opt.crop},
              {"tau", opt.tau},
              {"first_frame", opt.first_frame},
              {"sampling", opt.grid ? "grid" : "random"},
              {"disjointness", "val crops from the right-hand band of width max(crop, W*n_val/(n_train+n_val)); "
                               "train crops from the remaining band; no shared pixels"},
              {"source_u", train.u ? train.u->source_id : ""},
              {"source_v", train.v ? train.v->source_id : ""},
              {"frame_window", "time points t-tau+1..t, identical crop for u and v"},
              {"train", split_json(train)},
              {"val", split_json(val)}};
}

}  // namespace stgan::ingest

#endif  // STGAN_INGEST_HPP
