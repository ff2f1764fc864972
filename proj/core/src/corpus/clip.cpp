// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/corpus/clip.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mcvqa/error.hpp"

namespace mcvqa::corpus {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const ClipExample& clip, const std::string& what) {
  throw ValidationError("clip '" + clip.clip_id + "': " + what);
}

const json& field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw json::other_error::create(501, std::string("missing field '") + name + "'", &obj);
  return *it;
}

std::vector<TokenId> encode(const std::string& text, Vocabulary& vocab, bool extend) {
  return extend ? vocab.encode_adding(text) : vocab.encode(text);
}

ClipExample parse_clip(const json& obj, Vocabulary& vocab, bool extend) {
  ClipExample clip;
  const json& id = field(obj, "clip_id");
  clip.clip_id = id.is_string() ? id.get<std::string>() : id.dump();

  for (const auto& sub : field(obj, "subtitles")) {
    SubtitleSegment seg;
    seg.tokens = encode(field(sub, "text").get<std::string>(), vocab, extend);
    seg.start_time = field(sub, "start").get<double>();
    seg.end_time = field(sub, "end").get<double>();
    if (sub.contains("t") && field(sub, "t").get<std::size_t>() != clip.subtitles.size()) {
      throw ValidationError("clip '" + clip.clip_id + "': subtitle index " + sub["t"].dump() +
                            " out of order");
    }
    clip.subtitles.push_back(std::move(seg));
  }

  const json& frames = field(obj, "frames");
  clip.frames.segments = frames.size();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const json& seg = frames[t];
    if (t == 0) {
      clip.frames.per_segment = seg.size();
      clip.frames.dim = seg.empty() ? 0 : seg[0].size();
    }
    if (seg.size() != clip.frames.per_segment) {
      invalid(clip, "segment " + std::to_string(t) + " has " + std::to_string(seg.size()) +
                        " frames, expected " + std::to_string(clip.frames.per_segment));
    }
    for (const json& vec : seg) {
      if (vec.size() != clip.frames.dim) {
        invalid(clip, "segment " + std::to_string(t) + " has a frame of dimension " +
                          std::to_string(vec.size()) + ", expected " + std::to_string(clip.frames.dim));
      }
      for (const json& v : vec) clip.frames.values.push_back(v.get<float>());
    }
  }

  for (const auto& words : field(obj, "objects")) {
    std::vector<TokenId> ids;
    for (const auto& w : words) {
      for (TokenId tid : encode(w.get<std::string>(), vocab, extend)) ids.push_back(tid);
    }
    clip.objects.push_back(std::move(ids));
  }

  clip.question = encode(field(obj, "question").get<std::string>(), vocab, extend);
  for (const auto& a : field(obj, "answers")) clip.answers.push_back(encode(a.get<std::string>(), vocab, extend));
  clip.correct_index = field(obj, "correct_index").get<std::size_t>();

  if (auto it = obj.find("span"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2) throw json::type_error::create(302, "span must be [start, end]", &*it);
    const auto s = (*it)[0].get<std::int64_t>();
    const auto e = (*it)[1].get<std::int64_t>();
    if (s < 0 || e < 0) invalid(clip, "span has a negative index");
    clip.span = Span{static_cast<std::size_t>(s), static_cast<std::size_t>(e)};
  }
  return clip;
}

json clip_to_json(const ClipExample& clip, const Vocabulary& vocab) {
  json subs = json::array();
  for (std::size_t t = 0; t < clip.subtitles.size(); ++t) {
    const auto& s = clip.subtitles[t];
    subs.push_back({{"t", t}, {"text", vocab.decode(s.tokens)}, {"start", s.start_time}, {"end", s.end_time}});
  }
  json frames = json::array();
  for (std::size_t t = 0; t < clip.frames.segments; ++t) {
    json seg = json::array();
    for (std::size_t i = 0; i < clip.frames.per_segment; ++i) {
      const auto f = clip.frames.frame(t, i);
      seg.push_back(std::vector<float>(f.begin(), f.end()));
    }
    frames.push_back(std::move(seg));
  }
  json objects = json::array();
  for (const auto& o : clip.objects) {
    json words = json::array();
    for (TokenId id : o) words.push_back(vocab.token(id));
    objects.push_back(std::move(words));
  }
  json answers = json::array();
  for (const auto& a : clip.answers) answers.push_back(vocab.decode(a));
  json out = {{"clip_id", clip.clip_id},
              {"subtitles", std::move(subs)},
              {"frames", std::move(frames)},
              {"objects", std::move(objects)},
              {"question", vocab.decode(clip.question)},
              {"answers", std::move(answers)},
              {"correct_index", clip.correct_index}};
  out["span"] = clip.span ? json::array({clip.span->start, clip.span->end}) : json(nullptr);
  return out;
}

}  // namespace

void validate(const ClipExample& clip, const ClipLimits& limits) {
  const std::size_t segments = clip.subtitles.size();
  if (segments == 0) invalid(clip, "no subtitle segments");
  if (limits.segments != 0 && segments != limits.segments) {
    invalid(clip, std::to_string(segments) + " segments, expected " + std::to_string(limits.segments));
  }
  for (std::size_t t = 0; t < segments; ++t) {
    const auto& s = clip.subtitles[t];
    if (!(s.start_time < s.end_time)) invalid(clip, "segment " + std::to_string(t) + " has start >= end");
    if (t > 0 && s.start_time < clip.subtitles[t - 1].end_time) {
      invalid(clip, "segment " + std::to_string(t) + " overlaps its predecessor");
    }
  }
  const auto& f = clip.frames;
  if (f.segments != segments) {
    invalid(clip, std::to_string(f.segments) + " frame segments for " + std::to_string(segments) + " subtitles");
  }
  if (f.per_segment == 0 || f.dim == 0) invalid(clip, "missing frame features");
  if (limits.frames_per_segment != 0 && f.per_segment != limits.frames_per_segment) {
    invalid(clip, std::to_string(f.per_segment) + " frames per segment, expected " +
                      std::to_string(limits.frames_per_segment));
  }
  if (limits.frame_dim != 0 && f.dim != limits.frame_dim) {
    invalid(clip, "frame dimension " + std::to_string(f.dim) + ", expected " + std::to_string(limits.frame_dim));
  }
  if (f.values.size() != f.segments * f.per_segment * f.dim) invalid(clip, "frame storage size mismatch");
  for (float v : f.values) {
    if (!std::isfinite(v)) invalid(clip, "non-finite frame feature");
  }
  if (clip.objects.size() != segments) {
    invalid(clip, std::to_string(clip.objects.size()) + " object lists for " + std::to_string(segments) +
                      " segments");
  }
  if (clip.question.empty()) invalid(clip, "empty question");
  if (limits.options != 0 && clip.answers.size() != limits.options) {
    invalid(clip, std::to_string(clip.answers.size()) + " answers, expected " + std::to_string(limits.options));
  }
  for (const auto& a : clip.answers) {
    if (a.empty()) invalid(clip, "empty answer option");
  }
  if (clip.correct_index >= clip.answers.size()) {
    invalid(clip, "correct_index " + std::to_string(clip.correct_index) + " out of range");
  }
  if (clip.span) {
    if (clip.span->start > clip.span->end) {
      invalid(clip, "span start " + std::to_string(clip.span->start) + " > end " + std::to_string(clip.span->end));
    }
    if (clip.span->end >= segments) {
      invalid(clip, "span end " + std::to_string(clip.span->end) + " outside " + std::to_string(segments) +
                        " segments");
    }
  }
}

std::vector<ClipExample> load_jsonl(const std::filesystem::path& path, Vocabulary& vocab, bool extend_vocab,
                                    const ClipLimits& limits) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<ClipExample> clips;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ClipExample clip;
    try {
      clip = parse_clip(json::parse(line), vocab, extend_vocab);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    validate(clip, limits);
    clips.push_back(std::move(clip));
  }
  return clips;
}

Dataset load_dataset(const std::filesystem::path& path, const ClipLimits& limits) {
  Dataset data;
  data.clips = load_jsonl(path, data.vocab, true, limits);
  return data;
}

void save_jsonl(const std::filesystem::path& path, std::span<const ClipExample> clips, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& clip : clips) out << clip_to_json(clip, vocab).dump() << '\n';
}

bool in_validation_split(const std::string& clip_id, double fraction) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : clip_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  const double u = static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
  return u < fraction;
}

Split split_by_hash(std::span<const ClipExample> clips, double fraction) {
  Split split;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    (in_validation_split(clips[i].clip_id, fraction) ? split.validation : split.train).push_back(i);
  }
  return split;
}

}  // namespace mcvqa::corpus
