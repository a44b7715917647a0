#include "pairsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pairsim/rng.hpp"

namespace pairsim {

namespace {

constexpr int kOut = 32;       // emitted image side
constexpr int kCanvas = 64;    // 2x supersampled drawing side

struct Canvas {
  float px[kCanvas * kCanvas] = {};

  void stamp(double cx, double cy, double r, float v) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
    const int x1 = std::min(kCanvas - 1, static_cast<int>(std::ceil(cx + r + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
    const int y1 = std::min(kCanvas - 1, static_cast<int>(std::ceil(cy + r + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        const double cover = std::clamp(r + 0.5 - d, 0.0, 1.0);
        if (cover > 0.0) {
          float& p = px[y * kCanvas + x];
          p = std::max(p, static_cast<float>(v * cover));
        }
      }
    }
  }

  void segment(double x0, double y0, double x1, double y1, double r, float v) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      stamp(x0 + t * (x1 - x0), y0 + t * (y1 - y0), r, v);
    }
  }

  // Quadratic bezier from (x0,y0) to (x1,y1) with control point (cx,cy).
  void bezier(double x0, double y0, double cx, double cy, double x1, double y1,
              double r, float v) {
    const double approx = std::hypot(cx - x0, cy - y0) + std::hypot(x1 - cx, y1 - cy);
    const int steps = std::max(2, static_cast<int>(std::ceil(approx * 2.0)));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double u = 1.0 - t;
      stamp(u * u * x0 + 2 * u * t * cx + t * t * x1,
            u * u * y0 + 2 * u * t * cy + t * t * y1, r, v);
    }
  }

  void circle(double cx, double cy, double radius, double r, float v) {
    const int steps = std::max(8, static_cast<int>(std::ceil(radius * 8.0)));
    for (int i = 0; i < steps; ++i) {
      const double a = 2.0 * M_PI * i / steps;
      stamp(cx + radius * std::cos(a), cy + radius * std::sin(a), r, v);
    }
  }

  void fill_rect(int x0, int y0, int x1, int y1, float v) {
    for (int y = std::max(0, y0); y <= std::min(kCanvas - 1, y1); ++y) {
      for (int x = std::max(0, x0); x <= std::min(kCanvas - 1, x1); ++x) {
        float& p = px[y * kCanvas + x];
        p = std::max(p, v);
      }
    }
  }

  // 2x2 box downsample to the emitted resolution, plus additive speckle.
  Tensor emit(double noise, Rng& rng) const {
    Tensor out({1, kOut, kOut});
    for (int y = 0; y < kOut; ++y) {
      for (int x = 0; x < kOut; ++x) {
        const float sum = px[(2 * y) * kCanvas + 2 * x] + px[(2 * y) * kCanvas + 2 * x + 1] +
                          px[(2 * y + 1) * kCanvas + 2 * x] +
                          px[(2 * y + 1) * kCanvas + 2 * x + 1];
        float v = 0.25f * sum;
        if (noise > 0.0) v += static_cast<float>(rng.uniform_real(0.0, noise));
        out[static_cast<std::size_t>(y) * kOut + x] = std::clamp(v, 0.0f, 1.0f);
      }
    }
    return out;
  }
};

struct Stroke {
  double x0, y0, x1, y1;
  double curve;  // signed control-point offset as a fraction of stroke length
};

struct CharSpec {
  std::vector<Stroke> strokes;
  bool motif = false;  // closed loop, the curvy-script marker
  double mx = 32, my = 32, mradius = 5;
};

struct ScriptStyle {
  double curviness;    // mean |curve| of strokes
  double motif_rate;   // probability a character carries the loop motif
  double angle_snap;   // probability a stroke angle snaps to the 45-degree grid
  double stroke_len;   // length multiplier
  int min_strokes;
  int max_strokes;
};

ScriptStyle angular_style(double gap) {
  return {0.45 * (1.0 - gap), 0.45 * (1.0 - gap), 0.35 + 0.6 * gap, 1.0, 3, 5};
}

ScriptStyle curvy_style(double gap) {
  return {0.45 + 0.5 * gap, 0.4 + 0.55 * gap, 0.25 * (1.0 - gap), 0.9, 2, 4};
}

ScriptStyle random_style(Rng& rng) {
  ScriptStyle s;
  s.curviness = rng.uniform_real(0.0, 0.9);
  s.motif_rate = rng.uniform_real(0.0, 0.9);
  s.angle_snap = rng.uniform_real(0.0, 0.9);
  s.stroke_len = rng.uniform_real(0.8, 1.1);
  s.min_strokes = static_cast<int>(rng.uniform_int(2, 3));
  s.max_strokes = s.min_strokes + static_cast<int>(rng.uniform_int(1, 2));
  return s;
}

CharSpec make_char(const ScriptStyle& style, double char_var, Rng& rng) {
  CharSpec spec;
  const int n = static_cast<int>(rng.uniform_int(style.min_strokes, style.max_strokes));
  for (int s = 0; s < n; ++s) {
    Stroke st;
    st.x0 = rng.uniform_real(14.0, 50.0);
    st.y0 = rng.uniform_real(14.0, 50.0);
    double angle = rng.uniform_real(0.0, 2.0 * M_PI);
    if (rng.bernoulli(style.angle_snap)) {
      angle = std::round(angle / (M_PI / 4.0)) * (M_PI / 4.0);
    }
    const double len = style.stroke_len * rng.uniform_real(14.0, 30.0);
    st.x1 = std::clamp(st.x0 + len * std::cos(angle), 6.0, 58.0);
    st.y1 = std::clamp(st.y0 + len * std::sin(angle), 6.0, 58.0);
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    st.curve = sign * std::max(0.0, rng.normal(style.curviness, char_var * 0.3));
    spec.strokes.push_back(st);
  }
  spec.motif = rng.bernoulli(style.motif_rate);
  if (spec.motif) {
    spec.mx = rng.uniform_real(20.0, 44.0);
    spec.my = rng.uniform_real(20.0, 44.0);
    spec.mradius = rng.uniform_real(4.0, 7.0);
  }
  return spec;
}

struct WriterJitter {
  double cos_a, sin_a, scale, tx, ty;
  double thickness;
  double endpoint_sigma;
  float ink;

  void apply(double& x, double& y) const {
    const double dx = x - kCanvas / 2.0;
    const double dy = y - kCanvas / 2.0;
    x = kCanvas / 2.0 + scale * (cos_a * dx - sin_a * dy) + tx;
    y = kCanvas / 2.0 + scale * (sin_a * dx + cos_a * dy) + ty;
  }
};

WriterJitter make_jitter(double writer_var, Rng& rng) {
  WriterJitter j;
  const double angle = rng.normal(0.0, writer_var * 0.17);
  j.cos_a = std::cos(angle);
  j.sin_a = std::sin(angle);
  j.scale = std::clamp(1.0 + rng.normal(0.0, writer_var * 0.08), 0.7, 1.3);
  j.tx = rng.normal(0.0, writer_var * 2.0);
  j.ty = rng.normal(0.0, writer_var * 2.0);
  j.thickness = 2.1 * std::exp(rng.normal(0.0, 0.15));
  j.endpoint_sigma = writer_var * 1.3;
  j.ink = static_cast<float>(rng.uniform_real(0.82, 1.0));
  return j;
}

void render_char(const CharSpec& spec, const WriterJitter& j, Rng& rng, Canvas& canvas) {
  for (const Stroke& st : spec.strokes) {
    double x0 = st.x0 + rng.normal(0.0, j.endpoint_sigma);
    double y0 = st.y0 + rng.normal(0.0, j.endpoint_sigma);
    double x1 = st.x1 + rng.normal(0.0, j.endpoint_sigma);
    double y1 = st.y1 + rng.normal(0.0, j.endpoint_sigma);
    j.apply(x0, y0);
    j.apply(x1, y1);
    if (std::abs(st.curve) < 0.05) {
      canvas.segment(x0, y0, x1, y1, j.thickness, j.ink);
    } else {
      const double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
      const double len = std::hypot(x1 - x0, y1 - y0);
      double nx = -(y1 - y0), ny = x1 - x0;
      const double nn = std::max(1e-6, std::hypot(nx, ny));
      nx /= nn;
      ny /= nn;
      canvas.bezier(x0, y0, mx + st.curve * 0.8 * len * nx, my + st.curve * 0.8 * len * ny,
                    x1, y1, j.thickness, j.ink);
    }
  }
  if (spec.motif) {
    double mx = spec.mx, my = spec.my;
    j.apply(mx, my);
    canvas.circle(mx, my, spec.mradius * j.scale, j.thickness * 0.9, j.ink);
  }
}

std::string pad2(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

void add_script(DatasetTable& table, const std::string& name, int task_label,
                const ScriptStyle& style, int n_chars, int writers, double char_var,
                double writer_var, double noise, std::uint64_t seed) {
  for (int c = 0; c < n_chars; ++c) {
    Rng char_rng(derive_seed(seed, name + "/char", static_cast<std::uint64_t>(c)));
    const CharSpec spec = make_char(style, char_var, char_rng);
    const std::string character = name + "/c" + pad2(c);
    for (int w = 0; w < writers; ++w) {
      Rng inst_rng(derive_seed(seed, name + "/inst",
                               static_cast<std::uint64_t>(c) * 1000 + w));
      Canvas canvas;
      const WriterJitter jitter = make_jitter(writer_var, inst_rng);
      render_char(spec, jitter, inst_rng, canvas);
      LabeledImage img;
      img.id = character + "/w" + pad2(w);
      img.pixels = canvas.emit(noise, inst_rng);
      img.task_label = task_label;
      img.groups = {{"alphabet", name}, {"character", character}, {"writer", "w" + pad2(w)}};
      table.add(std::move(img));
    }
  }
}

}  // namespace

DatasetTable synth_script_corpus(const ScriptCorpusConfig& config) {
  if (config.chars0 < 1 || config.chars1 < 1 || config.writers < 1) {
    throw DomainError("synth_script_corpus: character and writer counts must be positive");
  }
  if (!(config.style_gap >= 0.0 && config.style_gap <= 1.0)) {
    throw DomainError("synth_script_corpus: style_gap outside [0,1]");
  }
  DatasetTable table;
  add_script(table, "script0", 0, angular_style(config.style_gap), config.chars0,
             config.writers, config.char_var, config.writer_var, config.noise, config.seed);
  add_script(table, "script1", 1, curvy_style(config.style_gap), config.chars1,
             config.writers, config.char_var, config.writer_var, config.noise, config.seed);
  return table;
}

DatasetTable synth_pretrain_corpus(const PretrainCorpusConfig& config) {
  if (config.n_alphabets < 1 || config.chars_per_alphabet < 1 || config.writers < 1) {
    throw DomainError("synth_pretrain_corpus: counts must be positive");
  }
  DatasetTable table;
  for (int a = 0; a < config.n_alphabets; ++a) {
    Rng style_rng(derive_seed(config.seed, "pretrain/style", static_cast<std::uint64_t>(a)));
    const ScriptStyle style = random_style(style_rng);
    const std::string name = "pre" + pad2(a);
    for (int c = 0; c < config.chars_per_alphabet; ++c) {
      Rng char_rng(derive_seed(config.seed, name + "/char", static_cast<std::uint64_t>(c)));
      const CharSpec spec = make_char(style, config.char_var, char_rng);
      const std::string character = name + "/c" + pad2(c);
      for (int w = 0; w < config.writers; ++w) {
        Rng inst_rng(derive_seed(config.seed, name + "/inst",
                                 static_cast<std::uint64_t>(c) * 1000 + w));
        Canvas canvas;
        const WriterJitter jitter = make_jitter(config.writer_var, inst_rng);
        render_char(spec, jitter, inst_rng, canvas);
        LabeledImage img;
        img.id = character + "/w" + pad2(w);
        img.pixels = canvas.emit(config.noise, inst_rng);
        img.task_label = c % 2;
        img.groups = {{"alphabet", name},
                      {"character", character},
                      {"writer", "w" + pad2(w)}};
        table.add(std::move(img));
      }
    }
  }
  return table;
}

DatasetTable synth_glyphs(int n_classes, int chars_per_class, int instances_per_char,
                          double bias_strength, std::uint64_t seed) {
  if (n_classes != 2) {
    throw DomainError("synth_glyphs: only binary tasks are supported, got " +
                      std::to_string(n_classes) + " classes");
  }
  if (chars_per_class < 1 || instances_per_char < 1) {
    throw DomainError("synth_glyphs: character and instance counts must be positive");
  }
  if (!(bias_strength >= 0.0 && bias_strength <= 1.0)) {
    throw DomainError("synth_glyphs: bias_strength outside [0,1]");
  }

  DatasetTable table;
  for (int label = 0; label < 2; ++label) {
    for (int c = 0; c < chars_per_class; ++c) {
      Rng char_rng(derive_seed(seed, "glyphs/char",
                               static_cast<std::uint64_t>(label) * 100000 + c));
      // Frame geometry varies per character; the bottom stroke is the label.
      const double width = 22.0 + char_rng.uniform_real(-4.0, 8.0);
      const double height = 28.0 + char_rng.uniform_real(-4.0, 8.0);
      const double cx = 32.0 + char_rng.uniform_real(-4.0, 4.0);
      const double cy = 32.0 + char_rng.uniform_real(-3.0, 3.0);
      const std::string character = "g" + std::to_string(label) + "_c" + pad2(c);

      for (int i = 0; i < instances_per_char; ++i) {
        Rng inst_rng(derive_seed(seed, "glyphs/inst",
                                 (static_cast<std::uint64_t>(label) * 100000 + c) * 1000 + i));
        const bool location_a = inst_rng.bernoulli(0.5);
        const double p_on =
            location_a ? 0.5 + bias_strength * (label == 1 ? 0.5 : -0.5) : 0.5;
        const bool nuisance_on = inst_rng.bernoulli(p_on);

        Canvas canvas;
        const WriterJitter jitter = make_jitter(0.6, inst_rng);
        const double l = cx - width / 2.0, r = cx + width / 2.0;
        const double t = cy - height / 2.0, b = cy + height / 2.0;
        if (nuisance_on) {
          // Sky patch visible through the upper half of the frame.
          canvas.fill_rect(static_cast<int>(l) + 2, static_cast<int>(t) + 2,
                           static_cast<int>(r) - 2,
                           static_cast<int>(t + height * 0.45), 0.35f);
        }
        auto edge = [&](double x0, double y0, double x1, double y1) {
          double ax = x0 + inst_rng.normal(0.0, 0.8), ay = y0 + inst_rng.normal(0.0, 0.8);
          double bx = x1 + inst_rng.normal(0.0, 0.8), by = y1 + inst_rng.normal(0.0, 0.8);
          jitter.apply(ax, ay);
          jitter.apply(bx, by);
          canvas.segment(ax, ay, bx, by, jitter.thickness, jitter.ink);
        };
        edge(l, t, l, b);
        edge(r, t, r, b);
        edge(l, t, r, t);
        if (label == 1) edge(l, b, r, b);

        LabeledImage img;
        img.id = character + "/i" + pad2(i);
        img.pixels = canvas.emit(0.04, inst_rng);
        img.task_label = label;
        img.groups = {{"alphabet", "glyphs"},
                      {"character", character},
                      {"writer", "w" + pad2(i)},
                      {"location", location_a ? "A" : "B"},
                      {"nuisance", nuisance_on ? "on" : "off"}};
        table.add(std::move(img));
      }
    }
  }
  return table;
}

}  // namespace pairsim
