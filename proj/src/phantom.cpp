#include "ual/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ual/errors.hpp"
#include "ual/uald_io.hpp"

namespace ual {
namespace fs = std::filesystem;

const char *modality_name(Modality m) {
  switch (m) {
  case Modality::T1: return "t1";
  case Modality::T2: return "t2";
  case Modality::Dwi: return "dwi";
  }
  return "?";
}

const char *phase_name(Phase p) {
  switch (p) {
  case Phase::Arterial: return "a";
  case Phase::PortalVenous: return "pv";
  case Phase::Delay: return "delay";
  }
  return "?";
}

const Grid &Sample::modality(Modality m) const {
  switch (m) {
  case Modality::T1: return t1;
  case Modality::T2: return t2;
  case Modality::Dwi: return dwi;
  }
  throw DataError("unknown modality");
}

const Grid &Sample::phase(Phase p) const {
  switch (p) {
  case Phase::Arterial: return ce_arterial;
  case Phase::PortalVenous: return ce_pv;
  case Phase::Delay: return ce_delay;
  }
  throw DataError("unknown phase");
}

std::array<int, 3> class_counts(int count, const std::array<double, 3> &mix) {
  std::array<int, 3> counts{};
  int total = 0;
  for (int k = 0; k < 3; ++k) {
    counts[k] = static_cast<int>(std::lround(count * mix[k]));
    total += counts[k];
  }
  const auto largest = static_cast<int>(std::max_element(mix.begin(), mix.end()) - mix.begin());
  counts[largest] += count - total;
  return counts;
}

std::optional<BoxTuple> enclosing_square(const Grid &mask) {
  int rmin = mask.height, rmax = -1, cmin = mask.width, cmax = -1;
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c) > 0.5F) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
  if (rmax < 0)
    return std::nullopt;
  BoxTuple b;
  b.cx = (cmin + cmax + 1) / 2.0;
  b.cy = (rmin + rmax + 1) / 2.0;
  b.side = std::max(rmax - rmin + 1, cmax - cmin + 1);
  return b;
}

namespace {

// Separable box blur, clamped borders.
Grid box_blur(const Grid &g, int radius) {
  Grid tmp(g.height, g.width), out(g.height, g.width);
  const float norm = 1.0F / static_cast<float>(2 * radius + 1);
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      float acc = 0;
      for (int d = -radius; d <= radius; ++d)
        acc += g.at(r, std::clamp(c + d, 0, g.width - 1));
      tmp.at(r, c) = acc * norm;
    }
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      float acc = 0;
      for (int d = -radius; d <= radius; ++d)
        acc += tmp.at(std::clamp(r + d, 0, g.height - 1), c);
      out.at(r, c) = acc * norm;
    }
  return out;
}

// Unit-variance smoothed Gaussian noise.
Grid smooth_noise(int h, int w, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid g(h, w);
  for (auto &v : g.values)
    v = static_cast<float>(normal(rng));
  g = box_blur(box_blur(g, 2), 2);
  double ss = 0;
  for (float v : g.values)
    ss += static_cast<double>(v) * v;
  const float inv = static_cast<float>(1.0 / std::sqrt(ss / g.size() + 1e-12));
  for (auto &v : g.values)
    v *= inv;
  return g;
}

struct Ellipse {
  double cy, cx, ry, rx, angle;
  [[nodiscard]] double level(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
    return (u * u) / (rx * rx) + (v * v) / (ry * ry);
  }
};

struct Contrast {
  double t1, t2, dwi;
  double rim;             // extra on all CEMRI phases at the lesion rim
  double a, pv, delay;    // CEMRI interior
  double ce_texture;      // heterogeneity amplitude inside the lesion
};

Contrast contrast_for(int cls, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> jitter(0.85, 1.15);
  std::bernoulli_distribution invisible(0.5);
  const double j = jitter(rng);
  if (cls == 1) // hemangioma
    return {-0.15 * j, 0.40 * j, 0.25 * j, 0.30 * j, 0.05 * j, 0.15 * j, 0.28 * j, 0.02};
  // HCC: NCMRI contrast is near zero half the time
  const bool hidden = invisible(rng);
  const double t1 = hidden ? 0.01 : -0.08 * j;
  const double t2 = hidden ? 0.01 : 0.12 * j;
  return {t1, t2, 0.30 * j, 0.0, 0.35 * j, 0.05 * j, -0.20 * j, 0.08};
}

Sample make_sample(const CorpusSpec &spec, int index, int cls) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed & 0xffffffffU),
                    static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x7u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int h = spec.height, w = spec.width;
  const double extent = std::min(h, w);

  Sample s;
  std::ostringstream id;
  id << 's' << std::setw(4) << std::setfill('0') << index;
  s.id = id.str();
  s.cls = cls;

  // Liver region: a large ellipse near the image centre.
  const Ellipse liver{h * (0.5 + 0.05 * (uni(rng) - 0.5)), w * (0.5 + 0.05 * (uni(rng) - 0.5)),
                      h * (0.38 + 0.04 * uni(rng)), w * (0.40 + 0.04 * uni(rng)),
                      (uni(rng) - 0.5) * 0.6};

  Grid mask(h, w), rim(h, w);
  if (cls != 0) {
    const double rmin = std::max(3.0, 0.06 * extent), rmax = std::max(4.5, 0.15 * extent);
    Ellipse tumor{};
    tumor.ry = rmin + (rmax - rmin) * uni(rng);
    tumor.rx = rmin + (rmax - rmin) * uni(rng);
    tumor.angle = std::numbers::pi * uni(rng);
    const double reach = std::max(tumor.rx, tumor.ry);
    const double margin = reach + 2.0;
    tumor.cy = margin + (h - 2 * margin) * uni(rng);
    tumor.cx = margin + (w - 2 * margin) * uni(rng);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double lv = tumor.level(r + 0.5, c + 0.5);
        if (lv <= 1.0) {
          mask.at(r, c) = 1.0F;
          // rim: outer ~1.5 px band of the lesion
          const double inner = 1.0 - 1.5 / std::min(tumor.rx, tumor.ry);
          if (std::sqrt(lv) >= inner)
            rim.at(r, c) = 1.0F;
        }
      }
  }
  const Contrast k = cls != 0 ? contrast_for(cls, rng) : Contrast{};

  auto render = [&](double liver_base, double outside_base, double lesion, double rim_gain,
                    double texture) {
    Grid noise = smooth_noise(h, w, rng);
    Grid fine = smooth_noise(h, w, rng);
    Grid g(h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const bool in_liver = liver.level(r + 0.5, c + 0.5) <= 1.0;
        double v = (in_liver ? liver_base : outside_base) + 0.05 * noise.at(r, c);
        if (mask.at(r, c) > 0.5F)
          v += lesion + rim_gain * rim.at(r, c) + texture * fine.at(r, c);
        g.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    return g;
  };
  s.t1 = render(0.55, 0.30, k.t1, 0.0, 0.0);
  s.t2 = render(0.35, 0.25, k.t2, 0.0, 0.0);
  s.dwi = render(0.30, 0.15, k.dwi, 0.0, 0.0);
  s.ce_arterial = render(0.40, 0.25, k.a, k.rim, k.ce_texture);
  s.ce_pv = render(0.55, 0.25, k.pv, k.rim, k.ce_texture);
  s.ce_delay = render(0.50, 0.25, k.delay, k.rim, k.ce_texture);
  s.mask = std::move(mask);
  s.box = enclosing_square(s.mask);
  return s;
}

} // namespace

std::vector<Sample> generate_corpus(const CorpusSpec &spec) {
  if (spec.count < 1)
    throw ConfigError("generate_corpus: count must be >= 1, got " + std::to_string(spec.count));
  if (spec.height < 32 || spec.width < 32)
    throw ConfigError("generate_corpus: height and width must be >= 32");
  double total = 0;
  for (double f : spec.class_mix) {
    if (!(f >= 0.0) || f > 1.0)
      throw ConfigError("generate_corpus: class fractions must lie in [0,1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw ConfigError("generate_corpus: class fractions sum to " + std::to_string(total) +
                      ", expected 1");

  const auto counts = class_counts(spec.count, spec.class_mix);
  std::vector<int> labels;
  for (int k = 0; k < 3; ++k)
    labels.insert(labels.end(), counts[k], k);
  std::mt19937_64 order_rng(spec.seed);
  std::shuffle(labels.begin(), labels.end(), order_rng);

  std::vector<Sample> out;
  out.reserve(labels.size());
  for (int i = 0; i < static_cast<int>(labels.size()); ++i)
    out.push_back(make_sample(spec, i, labels[i]));
  return out;
}

namespace {

constexpr std::array<const char *, 7> kGridFiles = {"t1",    "t2",   "dwi", "ce_a",
                                                    "ce_pv", "ce_d", "mask"};

std::array<const Grid *, 7> grids_of(const Sample &s) {
  return {&s.t1, &s.t2, &s.dwi, &s.ce_arterial, &s.ce_pv, &s.ce_delay, &s.mask};
}

std::array<Grid *, 7> grids_of(Sample &s) {
  return {&s.t1, &s.t2, &s.dwi, &s.ce_arterial, &s.ce_pv, &s.ce_delay, &s.mask};
}

} // namespace

void write_sample(const Sample &sample, const fs::path &dir) {
  fs::create_directories(dir);
  const auto grids = grids_of(sample);
  for (std::size_t i = 0; i < grids.size(); ++i)
    io::write_grid(dir / (std::string(kGridFiles[i]) + ".uald"), *grids[i]);

  nlohmann::ordered_json meta;
  meta["sample_id"] = sample.id;
  meta["cls"] = sample.cls;
  if (sample.box) {
    meta["cx"] = sample.box->cx;
    meta["cy"] = sample.box->cy;
    meta["side"] = sample.box->side;
  } else {
    meta["box"] = nullptr;
  }
  io::write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

Sample read_sample(const fs::path &dir) {
  Sample s;
  const auto grids = grids_of(s);
  for (std::size_t i = 0; i < grids.size(); ++i)
    *grids[i] = io::read_grid(dir / (std::string(kGridFiles[i]) + ".uald"));
  for (std::size_t i = 1; i < grids.size(); ++i)
    if (grids[i]->height != grids[0]->height || grids[i]->width != grids[0]->width)
      throw FormatError((dir / (std::string(kGridFiles[i]) + ".uald")).string() +
                        ": shape mismatch with t1.uald");

  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in)
    throw DataError(meta_path.string() + ": cannot open");
  nlohmann::json meta;
  try {
    in >> meta;
    s.id = meta.value("sample_id", dir.filename().string());
    s.cls = meta.at("cls").get<int>();
    if (meta.contains("box") && meta["box"].is_null()) {
      s.box.reset();
    } else {
      s.box = BoxTuple{meta.at("cx").get<double>(), meta.at("cy").get<double>(),
                       meta.at("side").get<double>()};
    }
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(meta_path.string() + ": malformed header: " + e.what());
  }
  if (s.cls < 0 || s.cls >= kNumClasses)
    throw FormatError(meta_path.string() + ": cls out of range");
  if ((s.cls == 0) != !s.box.has_value())
    throw FormatError(meta_path.string() + ": box presence inconsistent with cls");
  return s;
}

void write_corpus(const std::vector<Sample> &samples, const fs::path &root) {
  fs::create_directories(root);
  for (const auto &s : samples)
    write_sample(s, root / s.id);
}

std::vector<Sample> read_corpus(const fs::path &root) {
  if (!fs::is_directory(root))
    throw DataError(root.string() + ": not a dataset directory");
  std::vector<fs::path> dirs;
  for (const auto &e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "meta.json"))
      dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<Sample> out;
  out.reserve(dirs.size());
  for (const auto &d : dirs)
    out.push_back(read_sample(d));
  return out;
}

} // namespace ual
