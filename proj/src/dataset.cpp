// Copyright 2026 The textmass Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "textmass/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "textmass/errors.hpp"

namespace textmass {

static_assert(std::endian::native == std::endian::little, "TMEB I/O assumes a little-endian host");

std::string to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

int text_support_size(const SyntheticSpec& spec) {
  return static_cast<int>(std::floor(spec.coverage * spec.concept_dim + 1e-9));
}

namespace {

Vec unit_gaussian(SeededRng& rng, Eigen::Index n) {
  Vec z = sample_gaussian(rng, n);
  return z / z.norm();
}

void validate(const SyntheticSpec& spec) {
  require(spec.train_pairs + spec.test_pairs >= 2, "generate: need K >= 2 pairs");
  require(spec.concept_dim >= 2, "generate: concept dimension must be >= 2");
  require(spec.frames >= 1, "generate: frames per video must be >= 1");
  require(spec.coverage > 0.0 && spec.coverage <= 1.0, "generate: coverage must lie in (0, 1]");
  require(spec.noise >= 0.0, "generate: noise must be >= 0");
  require(spec.distractors >= 0, "generate: distractors must be >= 0");
  require(text_support_size(spec) >= 1, "generate: coverage * c < 1 leaves the text empty");
}

}  // namespace

std::vector<PairRecord> generate(const SyntheticSpec& spec) {
  validate(spec);
  const Eigen::Index c = spec.concept_dim;
  const int keep = text_support_size(spec);

  std::vector<Vec> pool;
  SeededRng pool_rng(spec.seed, substream({0xD15, 0}));
  for (Eigen::Index i = 0; i < 4 * c; ++i) pool.push_back(unit_gaussian(pool_rng, c));

  const int total = spec.train_pairs + spec.test_pairs;
  std::vector<PairRecord> out;
  out.reserve(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) {
    SeededRng rng(spec.seed, substream({0xDA7A, static_cast<std::uint64_t>(k)}));
    const Vec z = unit_gaussian(rng, c);

    PairRecord rec;
    rec.pair_id = k;
    rec.split = k < spec.train_pairs ? Split::kTrain : Split::kTest;
    rec.video.id = k;
    rec.video.frames.reserve(static_cast<std::size_t>(spec.frames));
    for (int f = 0; f < spec.frames; ++f) {
      Vec frame = z;
      for (int m = 0; m < spec.distractors; ++m) {
        const auto idx = static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(pool.size()));
        frame += spec.distractor_weight * pool[std::min(idx, pool.size() - 1)];
      }
      if (spec.noise > 0.0) frame += spec.noise * sample_gaussian(rng, c);
      rec.video.frames.push_back(frame / frame.norm());
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(z[a]) > std::abs(z[b]); });
    Vec text = Vec::Zero(c);
    for (int i = 0; i < keep; ++i) text[order[static_cast<std::size_t>(i)]] = z[order[static_cast<std::size_t>(i)]];
    rec.text.id = k;
    rec.text.features = text / text.norm();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PairRecord> select_split(const std::vector<PairRecord>& records, Split split) {
  std::vector<PairRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const PairRecord& r) { return r.split == split; });
  return out;
}

// ---- TMEB -------------------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::uint64_t at) {
  if (at + 4 > in.size()) throw FormatError("truncated embedding header", at);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t embedding_item_offset(std::uint64_t index, std::uint32_t rows_per_item, std::uint32_t dim) {
  return kEmbeddingHeaderBytes + index * rows_per_item * dim * sizeof(float);
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingFile& file) {
  std::vector<std::uint8_t> out;
  out.reserve(embedding_item_offset(file.items.size(), file.rows_per_item, file.dim));
  for (char ch : std::string("TMEB")) out.push_back(static_cast<std::uint8_t>(ch));
  put_u32(out, kEmbeddingFileVersion);
  put_u32(out, static_cast<std::uint32_t>(file.items.size()));
  put_u32(out, file.rows_per_item);
  put_u32(out, file.dim);
  for (const auto& item : file.items) {
    require(item.rows() == file.rows_per_item && item.cols() == file.dim,
            "write_embeddings: item shape does not match the file header");
    for (Eigen::Index r = 0; r < item.rows(); ++r) {
      for (Eigen::Index c = 0; c < item.cols(); ++c) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(item(r, c))));
      }
    }
  }
  return out;
}

EmbeddingFile decode_embeddings(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kMagic[] = "TMEB";
  for (std::uint64_t i = 0; i < 4; ++i) {
    if (i >= bytes.size()) throw FormatError("truncated embedding magic", i);
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) throw FormatError("bad embedding magic", i);
  }
  if (get_u32(bytes, 4) != kEmbeddingFileVersion) throw FormatError("unsupported embedding file version", 4);
  const std::uint32_t count = get_u32(bytes, 8);
  EmbeddingFile f;
  f.rows_per_item = get_u32(bytes, 12);
  f.dim = get_u32(bytes, 16);
  const std::uint64_t expected = embedding_item_offset(count, f.rows_per_item, f.dim);
  if (bytes.size() < expected) throw FormatError("truncated embedding payload", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after embedding payload", expected);
  f.items.reserve(count);
  std::uint64_t at = kEmbeddingHeaderBytes;
  for (std::uint32_t k = 0; k < count; ++k) {
    Mat item(f.rows_per_item, f.dim);
    for (std::uint32_t r = 0; r < f.rows_per_item; ++r) {
      for (std::uint32_t c = 0; c < f.dim; ++c, at += 4) {
        item(r, c) = static_cast<double>(std::bit_cast<float>(get_u32(bytes, at)));
      }
    }
    f.items.push_back(std::move(item));
  }
  return f;
}

EmbeddingFile embeddings_from_vectors(const std::vector<Vec>& items, std::uint32_t dim) {
  EmbeddingFile f;
  f.rows_per_item = 1;
  f.dim = dim;
  for (const auto& v : items) {
    require(v.size() == dim, "write_embeddings: heterogeneous dimensions");
    f.items.push_back(v.transpose());
  }
  return f;
}

EmbeddingFile embeddings_from_frames(const std::vector<FrameEmbeddingSet>& items, std::uint32_t rows,
                                     std::uint32_t dim) {
  EmbeddingFile f;
  f.rows_per_item = rows;
  f.dim = dim;
  for (const auto& s : items) {
    require(s.count() == rows && s.dim() == dim, "write_embeddings: heterogeneous frame sets");
    f.items.push_back(s.frames.transpose());
  }
  return f;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file) {
  const auto bytes = encode_embeddings(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

EmbeddingFile read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_embeddings(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

// ---- dataset directories ----------------------------------------------------

void write_dataset(const std::filesystem::path& dir, const std::vector<PairRecord>& records) {
  require(!records.empty(), "write_dataset: no records");
  std::filesystem::create_directories(dir);
  const auto c = static_cast<std::uint32_t>(records.front().text.features.size());
  const auto frames = static_cast<std::uint32_t>(records.front().video.frames.size());

  EmbeddingFile texts{1, c, {}};
  EmbeddingFile videos{frames, c, {}};
  for (const auto& r : records) {
    require(r.video.frames.size() == frames, "write_dataset: videos must share a frame count");
    texts.items.push_back(r.text.features.transpose());
    Mat m(frames, c);
    for (std::uint32_t f = 0; f < frames; ++f) m.row(f) = r.video.frames[f].transpose();
    videos.items.push_back(std::move(m));
  }
  write_embeddings(dir / "texts.tmeb", texts);
  write_embeddings(dir / "videos.tmeb", videos);

  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.csv").string());
  manifest << "pair_id,split,text_file_offset,video_file_offset\n";
  for (std::size_t k = 0; k < records.size(); ++k) {
    manifest << records[k].pair_id << ',' << to_string(records[k].split) << ','
             << embedding_item_offset(k, 1, c) << ',' << embedding_item_offset(k, frames, c) << '\n';
  }
}

std::vector<PairRecord> read_dataset(const std::filesystem::path& dir) {
  const auto texts = read_embeddings(dir / "texts.tmeb");
  const auto videos = read_embeddings(dir / "videos.tmeb");
  std::ifstream manifest(dir / "manifest.csv");
  if (!manifest) throw IoError("cannot open " + (dir / "manifest.csv").string());
  std::string line;
  std::getline(manifest, line);
  if (line != "pair_id,split,text_file_offset,video_file_offset") {
    throw FormatError("manifest.csv: unexpected header", 0);
  }
  std::vector<PairRecord> out;
  std::uint64_t line_start = line.size() + 1;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, split, toff, voff;
    if (!std::getline(ss, id, ',') || !std::getline(ss, split, ',') || !std::getline(ss, toff, ',') ||
        !std::getline(ss, voff)) {
      throw FormatError("manifest.csv: malformed row", line_start);
    }
    const std::uint64_t t_off = std::stoull(toff);
    const std::uint64_t v_off = std::stoull(voff);
    const std::uint64_t ti = (t_off - kEmbeddingHeaderBytes) / (texts.dim * sizeof(float));
    const std::uint64_t vi = (v_off - kEmbeddingHeaderBytes) / (videos.rows_per_item * videos.dim * sizeof(float));
    if (t_off < kEmbeddingHeaderBytes || ti >= texts.items.size() || vi >= videos.items.size() ||
        embedding_item_offset(ti, 1, texts.dim) != t_off ||
        embedding_item_offset(vi, videos.rows_per_item, videos.dim) != v_off) {
      throw FormatError("manifest.csv: offset does not address an item", line_start);
    }
    if (split != "train" && split != "test") throw FormatError("manifest.csv: unknown split '" + split + "'", line_start);
    PairRecord r;
    r.pair_id = std::stoll(id);
    r.split = split == "train" ? Split::kTrain : Split::kTest;
    r.text.id = r.pair_id;
    r.text.features = texts.items[ti].row(0).transpose();
    r.video.id = r.pair_id;
    for (Eigen::Index f = 0; f < videos.items[vi].rows(); ++f) r.video.frames.push_back(videos.items[vi].row(f).transpose());
    out.push_back(std::move(r));
    line_start += line.size() + 1;
  }
  return out;
}

}  // namespace textmass
