// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "mcvqa/error.hpp"

namespace mcvqa::corpus {
namespace {

constexpr std::size_t kLocations = 10;
constexpr std::size_t kClutter = 16;
constexpr std::size_t kMarkerRow = kLocations;
constexpr std::size_t kClutterRow = kLocations + 1;
constexpr std::uint64_t kCodebookSeed = 12345;

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5; }

// k distinct indices from [0, n) in draw order.
std::vector<std::size_t> distinct(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + below(rng, n - i)]);
  pool.resize(k);
  return pool;
}

void shuffle(std::mt19937_64& rng, std::vector<std::size_t>& v) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(rng, i)]);
}

double dot(std::span<const float> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

}  // namespace

const char* to_string(Profile profile) {
  switch (profile) {
    case Profile::kTextOnly: return "text_only";
    case Profile::kVisualLocal: return "visual_local";
    case Profile::kMixed: return "mixed";
  }
  return "mixed";
}

Profile profile_from_string(const std::string& name) {
  if (name == "text_only") return Profile::kTextOnly;
  if (name == "visual_local") return Profile::kVisualLocal;
  if (name == "mixed") return Profile::kMixed;
  throw ValidationError("unknown profile '" + name + "'");
}

Codebook::Codebook(std::size_t dim) : dim_(dim) {
  const std::size_t count = kClutterRow + kClutter;
  std::mt19937_64 rng(kCodebookSeed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  rows_.assign(count * dim, 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    double* v = rows_.data() + r * dim;
    for (std::size_t j = 0; j < dim; ++j) v[j] = gauss(rng);
    if (r < dim) {
      for (std::size_t q = 0; q < r; ++q) {
        const double* u = rows_.data() + q * dim;
        double proj = 0.0;
        for (std::size_t j = 0; j < dim; ++j) proj += v[j] * u[j];
        for (std::size_t j = 0; j < dim; ++j) v[j] -= proj * u[j];
      }
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < dim; ++j) norm += v[j] * v[j];
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim; ++j) v[j] /= norm;
  }
}

std::span<const double> Codebook::row(std::size_t k) const {
  return std::span<const double>(rows_).subspan(k * dim_, dim_);
}
std::span<const double> Codebook::event_marker() const { return row(kMarkerRow); }
std::span<const double> Codebook::location(std::size_t k) const { return row(k); }
std::span<const double> Codebook::clutter(std::size_t k) const { return row(kClutterRow + k); }
std::size_t Codebook::clutter_count() const { return kClutter; }

const std::vector<std::string>& World::entities() {
  static const std::vector<std::string> v{"ted", "marshall", "robin", "lily", "barney", "sheldon", "penny", "leonard"};
  return v;
}
const std::vector<std::string>& World::actions() {
  static const std::vector<std::string> v{"runs", "eats", "sleeps", "reads", "sings", "dances", "cooks", "waits"};
  return v;
}
const std::vector<std::string>& World::locations() {
  static const std::vector<std::string> v{"bar",      "kitchen", "office", "park",    "apartment",
                                          "hospital", "car",     "street", "library", "cafe"};
  return v;
}
const std::vector<std::string>& World::fillers() {
  static const std::vector<std::string> v{"yeah", "okay",  "i",     "think", "so",   "well", "you", "know",
                                          "really", "right", "maybe", "just", "oh", "hey", "sure", "now"};
  return v;
}
const std::vector<std::string>& World::objects() {
  static const std::vector<std::string> v{"shirt", "necklace", "cup",  "table",  "chair", "door",
                                          "lamp",  "phone",    "book", "window", "bag",   "hat"};
  return v;
}
const std::vector<std::string>& World::function_words() {
  static const std::vector<std::string> v{"where", "does", "?", "at"};
  return v;
}

Vocabulary synthetic_vocabulary() {
  Vocabulary vocab;
  for (const auto* list : {&World::entities(), &World::actions(), &World::locations(), &World::fillers(),
                           &World::objects(), &World::function_words()}) {
    for (const auto& w : *list) vocab.add(w);
  }
  return vocab;
}

Dataset generate_synthetic(std::uint64_t seed, std::size_t n_clips, Profile profile, const GeneratorConfig& cfg) {
  if (cfg.options != 5) throw ValidationError("the synthetic world plants exactly 5 answer options");
  if (cfg.segments < 2 || cfg.frames_per_segment < 4 || cfg.frames_per_segment > 6 || cfg.frame_dim == 0) {
    throw ValidationError("synthetic clips need at least 2 segments and 4 to 6 frames per segment");
  }
  Dataset data{synthetic_vocabulary(), {}};
  const Vocabulary& vocab = data.vocab;
  const Codebook book(cfg.frame_dim);
  const auto& ents = World::entities();
  const auto& acts = World::actions();
  const auto& locs = World::locations();
  const auto& fill = World::fillers();
  const auto& objs = World::objects();
  const std::size_t T = cfg.segments;
  const std::size_t I = cfg.frames_per_segment;
  const std::size_t D = cfg.frame_dim;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  auto fillers = [&](std::vector<TokenId>& out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(vocab.id(fill[below(rng, fill.size())]));
  };

  data.clips.reserve(n_clips);
  for (std::size_t c = 0; c < n_clips; ++c) {
    const bool textual = profile == Profile::kTextOnly || (profile == Profile::kMixed && coin(rng));
    const auto who = distinct(rng, ents.size(), 5);
    std::vector<std::size_t> did(5);
    for (auto& a : did) a = below(rng, acts.size());
    const auto where = distinct(rng, locs.size(), 5);
    const std::size_t tstar = below(rng, T);

    std::size_t start = tstar;
    std::size_t length = 1;
    if (textual && coin(rng)) {
      length = 2;
      if (tstar == T - 1 || (tstar > 0 && coin(rng))) start = tstar - 1;
    }
    const Span span{start, start + length - 1};

    std::vector<std::size_t> outside;
    for (std::size_t t = 0; t < T; ++t) {
      if (t < span.start || t > span.end) outside.push_back(t);
    }
    shuffle(rng, outside);
    std::vector<std::size_t> assigned(T, 0);
    for (std::size_t k = 0; k < std::min<std::size_t>(4, outside.size()); ++k) assigned[outside[k]] = 1 + k;
    std::vector<std::size_t> unused;
    for (std::size_t l = 0; l < locs.size(); ++l) {
      if (std::find(where.begin(), where.end(), l) == where.end()) unused.push_back(l);
    }

    ClipExample clip;
    char id[64];
    std::snprintf(id, sizeof(id), "syn%llu-%06zu-%c", static_cast<unsigned long long>(seed), c, textual ? 't' : 'v');
    clip.clip_id = id;
    clip.frames = FrameFeatures{T, I, D, std::vector<float>(T * I * D, 0.0f)};

    for (std::size_t t = 0; t < T; ++t) {
      std::vector<std::vector<double>> frames(I, std::vector<double>(D, 0.0));
      for (auto& f : frames) {
        const auto clutter = book.clutter(below(rng, book.clutter_count()));
        for (std::size_t j = 0; j < D; ++j) f[j] = 0.5 * clutter[j];
      }

      SubtitleSegment seg;
      seg.start_time = 2.0 * static_cast<double>(t);
      seg.end_time = seg.start_time + 1.5;
      const std::size_t d = assigned[t];
      if (textual) {
        if (t == tstar) {
          seg.tokens = {vocab.id(ents[who[0]]), vocab.id(acts[did[0]]), vocab.id("at"), vocab.id(locs[where[0]])};
          fillers(seg.tokens, 2);
        } else if (d != 0) {
          seg.tokens = {vocab.id(ents[who[d]]), vocab.id(acts[did[d]]), vocab.id("at"), vocab.id(locs[where[d]])};
          fillers(seg.tokens, 2);
        } else {
          fillers(seg.tokens, 4);
        }
      } else {
        std::size_t event = 0;
        if (t == tstar) {
          seg.tokens = {vocab.id(ents[who[0]]), vocab.id(acts[did[0]])};
          fillers(seg.tokens, 3);
          event = where[0];
        } else if (d != 0) {
          seg.tokens = {vocab.id(ents[who[d]]), vocab.id(acts[did[d]])};
          fillers(seg.tokens, 3);
          event = where[d];
        } else {
          fillers(seg.tokens, 4);
          event = unused[below(rng, unused.size())];
        }
        std::vector<std::size_t> plains;
        for (std::size_t k : distinct(rng, unused.size(), I - 1)) plains.push_back(unused[k]);
        std::vector<std::size_t> slot(I);
        std::iota(slot.begin(), slot.end(), std::size_t{0});
        shuffle(rng, slot);
        const auto marker = book.event_marker();
        const auto place = book.location(event);
        for (std::size_t j = 0; j < D; ++j) frames[slot[0]][j] = marker[j] + place[j];
        for (std::size_t k = 0; k < plains.size(); ++k) {
          const auto dir = book.location(plains[k]);
          for (std::size_t j = 0; j < D; ++j) frames[slot[k + 1]][j] = dir[j];
        }
      }

      for (std::size_t i = 0; i < I; ++i) {
        auto out = clip.frames.frame(t, i);
        for (std::size_t j = 0; j < D; ++j) out[j] = static_cast<float>(frames[i][j] + noise(rng));
      }
      std::vector<TokenId> seen;
      const std::size_t n_obj = 1 + below(rng, 3);
      for (std::size_t k = 0; k < n_obj; ++k) seen.push_back(vocab.id(objs[below(rng, objs.size())]));
      clip.objects.push_back(std::move(seen));
      clip.subtitles.push_back(std::move(seg));
    }

    clip.question = {vocab.id("where"), vocab.id("does"), vocab.id(ents[who[0]]), vocab.id(acts[did[0]]),
                     vocab.id("?")};
    std::vector<std::size_t> order(5);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(rng, order);
    clip.answers.assign(5, {});
    for (std::size_t k = 0; k < 5; ++k) {
      clip.answers[order[k]] = {vocab.id(ents[who[0]]), vocab.id(acts[did[0]]), vocab.id("at"),
                                vocab.id(locs[where[k]])};
    }
    clip.correct_index = order[0];
    clip.span = span;
    data.clips.push_back(std::move(clip));
  }
  return data;
}

Profile clip_profile(const ClipExample& clip) {
  if (!clip.clip_id.empty() && clip.clip_id.back() == 't') return Profile::kTextOnly;
  if (!clip.clip_id.empty() && clip.clip_id.back() == 'v') return Profile::kVisualLocal;
  return Profile::kMixed;
}

bool frame_shows_event(std::span<const float> frame, const Codebook& codebook, std::size_t location) {
  return dot(frame, codebook.event_marker()) > 0.5 && dot(frame, codebook.location(location)) > 0.5;
}

std::vector<double> codebook_answer_scores(const ClipExample& clip, const Vocabulary& vocab, const Codebook& codebook) {
  const auto& locs = World::locations();
  std::vector<TokenId> key;
  for (TokenId id : clip.question) {
    const auto& w = vocab.token(id);
    if (std::find(World::entities().begin(), World::entities().end(), w) != World::entities().end() ||
        std::find(World::actions().begin(), World::actions().end(), w) != World::actions().end()) {
      key.push_back(id);
    }
  }
  std::vector<double> scores(clip.answers.size(), 0.0);
  for (std::size_t n = 0; n < clip.answers.size(); ++n) {
    const auto it = std::find(locs.begin(), locs.end(), vocab.token(clip.answers[n].back()));
    if (it == locs.end()) continue;
    const auto place = codebook.location(static_cast<std::size_t>(it - locs.begin()));
    double best = 0.0;
    for (std::size_t t = 0; t < clip.segment_count(); ++t) {
      const auto& toks = clip.subtitles[t].tokens;
      const bool relevant = std::all_of(key.begin(), key.end(), [&](TokenId k) {
        return std::find(toks.begin(), toks.end(), k) != toks.end();
      });
      if (!relevant) continue;
      for (std::size_t i = 0; i < clip.frames.per_segment; ++i) {
        const auto f = clip.frames.frame(t, i);
        best = std::max(best, dot(f, codebook.event_marker()) + dot(f, place));
      }
    }
    scores[n] = best;
  }
  return scores;
}

}  // namespace mcvqa::corpus
